import os

ROOT_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), os.path.pardir))
CONFIG_DIR = os.path.join(ROOT_DIR, 'config')
LOGGING_CONFIG = os.path.join(CONFIG_DIR, 'logging.yaml')
DEFAULT_RUN_CONFIG = os.path.join(CONFIG_DIR, 'base.conf')
