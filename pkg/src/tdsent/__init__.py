"""Target-dependent sentiment classification, built from scratch.

Recurrent classifiers over (sentence, target-span) pairs: a span-blind LSTM
baseline, two target-aware variants that split the sentence at the target,
and a soft-attention variant. Training is plain per-example SGD with exact
reverse-mode gradients; everything is deterministic under a seed.
"""

from .cells import LstmCellParams, LstmState, RnnCellParams, lstm_step, rnn_step, run_sequence
from .corpus import (
    CLASS_NAMES,
    Instance,
    SplitInstance,
    class_distribution,
    label_to_class,
    make_instance,
    parse_corpus,
    split,
    write_corpus,
)
from .embeddings import (
    EmbeddingTable,
    Vocabulary,
    load_pretrained,
    lookup,
    random_table,
    target_vector,
)
from .evaluation import EvalReport, error_cases, evaluate
from .gradcheck import GradCheckReport, check_gradients
from .mathcore import Gradients, Tape, Tensor
from .models import (
    COMBINE_MODES,
    VARIANTS,
    AttentionParams,
    ModelParams,
    Prediction,
    SoftmaxParams,
    forward_att,
    forward_lstm,
    forward_tc,
    forward_td,
    init_params,
    load_params,
    predict,
    save_params,
)
from .training import (
    EpochRecord,
    TrainConfig,
    TrainLog,
    cross_entropy,
    loss_and_gradients,
    sgd_step,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionParams",
    "CLASS_NAMES",
    "COMBINE_MODES",
    "EmbeddingTable",
    "EpochRecord",
    "EvalReport",
    "GradCheckReport",
    "Gradients",
    "Instance",
    "LstmCellParams",
    "LstmState",
    "ModelParams",
    "Prediction",
    "RnnCellParams",
    "SoftmaxParams",
    "SplitInstance",
    "Tape",
    "Tensor",
    "TrainConfig",
    "TrainLog",
    "VARIANTS",
    "Vocabulary",
    "check_gradients",
    "class_distribution",
    "cross_entropy",
    "error_cases",
    "evaluate",
    "forward_att",
    "forward_lstm",
    "forward_tc",
    "forward_td",
    "init_params",
    "label_to_class",
    "load_params",
    "load_pretrained",
    "lookup",
    "loss_and_gradients",
    "lstm_step",
    "make_instance",
    "parse_corpus",
    "predict",
    "random_table",
    "rnn_step",
    "run_sequence",
    "save_params",
    "sgd_step",
    "split",
    "target_vector",
    "train",
    "write_corpus",
]
