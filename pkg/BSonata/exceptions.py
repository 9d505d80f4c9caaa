class BSonataError(Exception):
    """Root of every domain error raised by the project's apps."""
