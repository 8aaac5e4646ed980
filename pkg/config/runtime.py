import os
from dotenv import load_dotenv

load_dotenv()
GRIDTOP_THREADS = int(os.environ.get("GRIDTOP_THREADS", os.cpu_count() or 1))
GRIDTOP_LOG_LEVEL = os.environ.get("GRIDTOP_LOG_LEVEL", "INFO")
