class ConfigError(ValueError):
    """Invalid experiment configuration, detected before any work is done."""
