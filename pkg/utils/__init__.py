# Package initialization for utils module

# Import utility classes for easier access
from .config import RunConfig, load_config
from .report_generator import ReportGenerator
from .csv_export import field_frame, matrix_frame, condition_frame

# Package metadata
__all__ = [
    'RunConfig',
    'load_config',
    'ReportGenerator',
    'field_frame',
    'matrix_frame',
    'condition_frame'
]

__version__ = '0.1.0'
