from .tensor import Function, Graph, Node, Tensor, active_graph, backward
from . import ops

__all__ = ["Function", "Graph", "Node", "Tensor", "active_graph", "backward", "ops"]
