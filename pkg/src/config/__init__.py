# Settings and training configuration
