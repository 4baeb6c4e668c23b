"""Hybrid global/local anomaly scoring for image manipulation detection."""

from .attention_score import (AttentionMap, AttentionSummary, GlobalScore,
                              ReferenceStats, aggregate_attention, calibrate,
                              score_global, summarise)
from .evaluation import (ConfusionCounts, EvalReport, confusion, detection_auc,
                         evaluate_dataset, metrics)
from .fusion import FusionConfig, fuse, fuse_harmonic, fuse_weighted, sweep_alpha
from .losses import (AlignmentFeatures, LossWeights, alignment_loss, bce_loss,
                     dice_loss, focal_loss, total_loss)
from .patch_consistency import (LocalResult, PatchGridConfig, cosine_sim,
                                local_score, patch_anomaly, resize_mask_nn)
from .providers import (FeatureBundle, ToyConfig, fetch_features, toy_attention,
                        toy_bundle, toy_patch_embeddings)
from .tensor_io import (DatasetManifest, SampleEntry, Tensor, load_manifest,
                        read_tensor, read_tensor_file, write_tensor,
                        write_tensor_file)

__version__ = "0.1.0"
