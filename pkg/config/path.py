OUTPUT_DIR = "data/generated"
IDENTIFY_DIR = "data/identified"
BENCHMARK_DIR = "data/benchmark"

TOPOLOGY_FILE = "topology.json"
READINGS_FILE = "readings.csv"
NOISE_MANIFEST_FILE = "noise_manifest.json"
DIAGNOSTICS_FILE = "diagnostics.csv"
SPECTRUM_FILE = "spectrum.csv"
NOISE_STATS_FILE = "noise_stats.json"
REPORT_FILE = "benchmark_report.csv"
SUMMARY_FILE = "benchmark_summary.md"
TRIALS_FILE = "benchmark_trials.csv"
