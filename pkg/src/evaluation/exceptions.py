class ReportError(Exception):
    """A comparison report cannot be built from the given runs."""
    pass
