import importlib.metadata

__title__: str = "malalab"
__version__: str = "0.1.0"
__csv_schema_version__: str = "1"

try:
    if __package__ is not None:
        __version__ = importlib.metadata.version(__package__)
except importlib.metadata.PackageNotFoundError:
    pass
