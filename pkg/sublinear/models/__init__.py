from .edges import EdgeId
from .instances import MetricInstance, SetSystem

__all__ = ["EdgeId", "MetricInstance", "SetSystem"]
