import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Base configuration class."""
    # Output directory for logs and generated instances
    APP_DATA_DIR = os.environ.get('ALTMIN_DATA_DIR', 'instance')

    ALTMIN_ENV = os.environ.get('ALTMIN_ENV', 'development')
    if ALTMIN_ENV == 'CHANGE_THIS_ENVIRONMENT':
        raise ValueError("ALTMIN_ENV must be changed from the default placeholder value")

    # Application settings
    DEBUG = False
    TESTING = False
    LOG_LEVEL = os.environ.get('ALTMIN_LOG_LEVEL')

    # Worker threads for sweeps and comparisons (configurable via environment variables)
    THREADS = int(os.environ.get('ALTMIN_THREADS', '1'))

    # Diagnostics settings
    RIP_ENUMERATION_CAP = int(os.environ.get('RIP_ENUMERATION_CAP', '100000'))
    RIP_SAMPLED_SUPPORTS = int(os.environ.get('RIP_SAMPLED_SUPPORTS', '10000'))

    # Solver settings
    GRADES_MAX_ITERS = int(os.environ.get('GRADES_MAX_ITERS', '300'))
    FISTA_MAX_ITERS = int(os.environ.get('FISTA_MAX_ITERS', '2000'))
    RANK_TOL = float(os.environ.get('RANK_TOL', '1e-10'))

    # Experiment defaults
    DEFAULT_ITERS = int(os.environ.get('ALTMIN_ITERS', '25'))
    SUCCESS_TOL = float(os.environ.get('ALTMIN_SUCCESS_TOL', '1e-6'))


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    # Keep diagnostics small so the suite stays fast
    RIP_ENUMERATION_CAP = 5000
    RIP_SAMPLED_SUPPORTS = 500


class ProductionConfig(Config):
    """Production configuration (long unattended sweeps)."""
    # Explicitly disable debug logging in production
    DEBUG = False
    LOG_FILE_MAX_BYTES = 10240
    LOG_FILE_BACKUPS = 10


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}
