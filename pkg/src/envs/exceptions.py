class UnknownEnvironmentError(KeyError):
    pass
