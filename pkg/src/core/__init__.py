"""
Core numerics, the decoupled classification loss and detection geometry.
"""

from .numerics import (
    cross_entropy_from_logits,
    finite_diff_grad,
    log_sum_exp,
    max_relative_error,
    stable_softmax,
)
from .dcloss import (
    LossBreakdown,
    RoiClassificationBatch,
    build_image_mask,
    dc_loss_batch_grad,
    dc_loss_image,
    masked_logits,
    negative_head_grad_logits,
    negative_head_loss,
    positive_head_grad_logits,
    positive_head_loss,
    standard_ce_batch_grad,
    standard_ce_image,
)
from .detection import (
    Box,
    GroundTruthInstance,
    RoiAssignment,
    RoiSample,
    assign_labels,
    iou,
    iou_matrix,
    sample_rois,
)

__all__ = [
    # Numerics
    'stable_softmax',
    'log_sum_exp',
    'cross_entropy_from_logits',
    'finite_diff_grad',
    'max_relative_error',

    # Decoupled loss
    'RoiClassificationBatch',
    'LossBreakdown',
    'build_image_mask',
    'masked_logits',
    'positive_head_loss',
    'negative_head_loss',
    'positive_head_grad_logits',
    'negative_head_grad_logits',
    'dc_loss_image',
    'standard_ce_image',
    'dc_loss_batch_grad',
    'standard_ce_batch_grad',

    # Detection
    'Box',
    'GroundTruthInstance',
    'RoiAssignment',
    'RoiSample',
    'iou',
    'iou_matrix',
    'assign_labels',
    'sample_rois',
]
