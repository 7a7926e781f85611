from .engine import PurePythonEngine, RawDescriptors, default_engine

__all__ = ["PurePythonEngine", "RawDescriptors", "default_engine"]
