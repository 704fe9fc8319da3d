"""
Decoupling Classifier Lab

Missing-label few-shot detection experiments: the decoupled positive/negative
classification loss, a synthetic few-shot scene pipeline, a linear ROI
classifier trainer with Recall/mRecall evaluation, and a missing-rate auditor
for COCO-style annotation files.
"""

__version__ = "1.0.0"
