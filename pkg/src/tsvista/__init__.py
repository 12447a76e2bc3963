"""Self-supervised pre-training for time series classification.

Two contrastive objectives drive pre-training: agreement among prototype
aggregates of augmented views, and cross-modal agreement between each series
and its rendered line-chart image (with geodesic mixup negatives).
"""

from .augment import AugmentationKind, AugmentedViewSet, augment, default_bank, generate_view_sets, view_distance
from .data import Dataset, PretrainPool, TimeSeriesSample, fewshot_split, load_dataset, sample_batch, znormalize
from .encoders import ImageEncoder, ProjectionHead, SeriesEncoder, project
from .imaging import RasterImage, rasterize
from .losses import (
    LossBreakdown,
    TemperaturePair,
    adaptive_temperatures,
    geodesic_mixup,
    inter_prototype_loss,
    intra_prototype_loss,
    make_prototype,
    mixup_si_loss,
    naive_si_loss,
    prototype_loss,
    si_loss,
    total_loss,
)
from .metrics import ResultsTable, accuracy, aggregate, friedman_nemenyi, render_cd_diagram, semantic_drift_study
from .pipeline import Checkpoint, ExperimentConfig, FinetunedModel, finetune, load_config, predict, pretrain

__version__ = "0.1.0"
