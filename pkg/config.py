"""
Configuration file for the NSF statistics toolkit
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Base configuration"""
    DEBUG = False
    TESTING = False

    # Output directory
    OUTPUT_DIR = os.environ.get('NSF_OUTPUT_DIR') or os.path.join(os.path.dirname(__file__), 'output')

    # Ensemble worker pool, defaults to available parallelism
    WORKERS = int(os.environ.get('NSF_WORKERS') or os.cpu_count() or 1)

    LOG_LEVEL = os.environ.get('NSF_LOG_LEVEL', 'INFO')

    # Sample run configurations
    CONFIG_DIR = os.path.join(os.path.dirname(__file__), 'src', 'main', 'resources', 'configs')

    @staticmethod
    def init_output(output_dir: str = None) -> str:
        """Create the output directory if it doesn't exist"""
        output_dir = output_dir or Config.OUTPUT_DIR
        os.makedirs(output_dir, exist_ok=True)
        return output_dir


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True
    LOG_LEVEL = os.environ.get('NSF_LOG_LEVEL', 'DEBUG')


class ProductionConfig(Config):
    """Production configuration"""
    pass


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    WORKERS = 1


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': ProductionConfig
}


def get_config():
    """Profile selected by NSF_PROFILE"""
    return config.get(os.environ.get('NSF_PROFILE', 'default'), config['default'])
