"""Graph neural network that turns direct trust into historical trust."""

from cste.gnnet.layers import LayerParams, ec_layer_forward, message, neighbor_weights, tf_layer_forward
from cste.gnnet.model import GnnHyper, GnnModel, GraphArrays, forward_all, loss, predict, predict_batch, readout
from cste.gnnet.train import Batch, TrainedTrust, TrainMetrics, TrainingError, gradients, predict_trust, train

__all__ = [
    "Batch",
    "GnnHyper",
    "GnnModel",
    "GraphArrays",
    "LayerParams",
    "TrainMetrics",
    "TrainedTrust",
    "TrainingError",
    "ec_layer_forward",
    "forward_all",
    "gradients",
    "loss",
    "message",
    "neighbor_weights",
    "predict",
    "predict_batch",
    "predict_trust",
    "readout",
    "tf_layer_forward",
    "train",
]
