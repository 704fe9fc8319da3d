"""
Linear ROI classifier, fine-tuning loop, Recall/mRecall and gradient checks.
"""

from .classifier import LinearClassifier, backprop_image, forward, init_classifier, sgd_step
from .trainer import TrainResult, TrainingBatch, train, train_paired
from .metrics import EvalReport, evaluate_recall
from .gradcheck import GradCheckReport, run_grad_check

__all__ = [
    'LinearClassifier',
    'init_classifier',
    'forward',
    'sgd_step',
    'backprop_image',
    'TrainingBatch',
    'TrainResult',
    'train',
    'train_paired',
    'EvalReport',
    'evaluate_recall',
    'GradCheckReport',
    'run_grad_check',
]
