"""Supernet search: losses, networks, data, optimizers and the search loop."""
from .data import ImageDataset, oriented_textures, read_raster, write_raster
from .engine import (MODES, SearchConfig, SearchDivergence, SearchResult, SearchState,
                     metrics_csv, search, train_discrete)
from .losses import (LossConfig, ablation_loss, ablation_losses, fair_loss, total_loss,
                     zero_one_loss)
from .network import Network, discrete_network, supernet
from .opscore import op_score_benchmark

__all__ = ["ImageDataset", "oriented_textures", "read_raster", "write_raster", "MODES",
           "SearchConfig", "SearchDivergence", "SearchResult", "SearchState", "metrics_csv",
           "search", "train_discrete", "LossConfig", "ablation_loss", "ablation_losses",
           "fair_loss", "total_loss", "zero_one_loss", "Network", "discrete_network",
           "supernet", "op_score_benchmark"]
