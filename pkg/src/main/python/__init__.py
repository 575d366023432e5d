# Main Python package for the NSF statistics toolkit

__version__ = "1.0.0"
