"""Snapshot encoders, recurrent decoders and the ten model assemblies."""
from .assembly import (
    ARCHITECTURES,
    REFERENCE_CONFIGS,
    EmbeddingSequence,
    Encoder,
    InfluencerModel,
    ModelConfig,
    PreparedSnapshot,
    build_model,
    decode_classify,
    encode_window,
    prepare_network,
    unroll,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import (
    GatLayerParams,
    GcnLayerParams,
    HeadParams,
    RnnCellParams,
    attention_index,
    gat_forward,
    gat_layer,
    gcn_forward,
    gcn_norm_adj,
    gru_step,
    head_logits,
    lstm_step,
)
