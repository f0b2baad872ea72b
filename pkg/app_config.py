import os

from dotenv import load_dotenv

load_dotenv()


OUTPUT_ROOT = os.getenv('IDPINN_OUTPUT_ROOT', 'runs')
CACHE_DIR = os.getenv('IDPINN_CACHE_DIR', '.cache')
NUM_WORKERS = int(os.getenv('IDPINN_NUM_WORKERS', '1'))
LOG_LEVEL = os.getenv('IDPINN_LOG_LEVEL', 'INFO')
DATABASE_URL = os.getenv('DATABASE_URL', 'sqlite:///./idpinn_runs.db')
CONFIG_DIR = os.getenv('IDPINN_CONFIG_DIR', os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs'))
