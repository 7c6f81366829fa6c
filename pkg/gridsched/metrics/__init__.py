from gridsched.metrics.bundle import MetricsBundle, compute_metrics, par
from gridsched.metrics.tables import savings_table, sigma_curve

__all__ = ["MetricsBundle", "compute_metrics", "par", "savings_table", "sigma_curve"]
