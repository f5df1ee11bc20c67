from .layers import Dense, DenseNet, elu, elu_grad, softmax
from .recurrent import LSTMCell, RecurrentStack
from .moe import MixtureOfExperts
from .optim import Adam, cosine_lr, NonFiniteGradientError
from .gradcheck import finite_difference_check
from .checkpoint import save_checkpoint, load_checkpoint, CheckpointError
from .normalizer import Normalizer

__all__ = [
    "Dense",
    "DenseNet",
    "elu",
    "elu_grad",
    "softmax",
    "LSTMCell",
    "RecurrentStack",
    "MixtureOfExperts",
    "Adam",
    "cosine_lr",
    "NonFiniteGradientError",
    "finite_difference_check",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointError",
    "Normalizer",
]
