"""Distributed multilevel force-directed graph layout on a vertex-centric BSP engine."""

from .engine import EngineConfig, RunStats, VertexProgram, run
from .gila import LayoutConfig, LayoutParams, choose_k, flood_neighborhoods, run_single_level
from .graph import Graph, Layout, connected_components, load_edge_list, prune_degree_one, reinsert
from .merger import Hierarchy, build_hierarchy
from .metrics import QualityReport, arrange_components, count_crossings, export, neld
from .partition import PartitionMap, partition
from .pipeline import PipelineConfig, PipelineError, layout_graph, run_pipeline
from .placer import PlacementInput, place_level

__all__ = [
    "EngineConfig", "Graph", "Hierarchy", "Layout", "LayoutConfig", "LayoutParams",
    "PartitionMap", "PipelineConfig", "PipelineError", "PlacementInput", "QualityReport",
    "RunStats", "VertexProgram", "arrange_components", "build_hierarchy", "choose_k",
    "connected_components", "count_crossings", "export", "flood_neighborhoods",
    "layout_graph", "load_edge_list", "neld", "partition", "place_level", "prune_degree_one",
    "reinsert", "run", "run_pipeline", "run_single_level",
]
