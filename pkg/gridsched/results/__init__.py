from gridsched.results.writer import ResultWriter

__all__ = ["ResultWriter"]
