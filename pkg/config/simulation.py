# Random phase-network protocol

PHASE_COUNT = 3
CONSUMERS_PER_PHASE_RANGE = (75, 100)

# Consumer reading ranges in watt-hours, picked with equal probability
LOAD_RANGES_WH = (
    (0.0, 100.0),
    (0.0, 300.0),
    (0.0, 500.0),
)

# Independent random streams, one per concern
STREAM_TOPOLOGY = 0
STREAM_LOADS = 1
STREAM_DISTANCES = 2
STREAM_METER_ERROR = 3
STREAM_SYNC_ERROR = 4
