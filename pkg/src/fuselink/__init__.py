"""Multimodal entity linking over file-based encoder outputs.

The library fuses pooled text, image, and expert features with multi-head
cross-attention, trains the fusion weights with a contrastive objective
against candidate entity embeddings, and ranks knowledge-base entities by
cosine similarity.  All encoders live behind binary/text file formats, so
everything here runs on synthetic data with no pretrained models.
"""

from .autodiff import Gradients, Tape, Tensor, backward
from .candidates import (CandidateSet, generate_candidates, levenshtein,
                         read_candidate_sets, similarity_ratio, write_candidate_sets)
from .config import RunConfig, resolve_config
from .data import (DatasetStats, EntityRecord, MentionSample, compute_stats,
                   read_entities, read_samples, write_entities, write_samples)
from .dataset import DatasetBundle, FeatureStore, load_dataset, write_dataset
from .embfile import (EmbeddingTable, load_checkpoint, read_arrays, read_embeddings,
                      save_checkpoint, write_arrays, write_embeddings)
from .enhance import (Category, ClassifierRules, EnhancementReport, MockProvider,
                      ProviderConfig, build_prompt, classify_response, enhance_entities)
from .errors import FuselinkError
from .fusion import (AttentionParams, ExpertInfo, FeatureBundle, FusedFeatures,
                     cross_attention, expert_concat, forward, fuse, identity_params,
                     init_params)
from .losses import (LossBatch, LossPair, batch_from_candidates, npair_paper,
                     npair_standard)
from .mockdata import mock_generate
from .optim import AdamWState, adamw_step
from .ranking import EvalReport, RankResult, evaluate, rank_of_gold, topk_accuracy
from .train import TrainResult, train_model

__version__ = "0.1.0"
