"""
Utilities for the clumsy coupon collector toolkit
"""
from utils.logger import configure_logger, get_module_logger, log_exception, set_level

__all__ = ['configure_logger', 'get_module_logger', 'log_exception', 'set_level']
