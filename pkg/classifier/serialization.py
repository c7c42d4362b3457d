"""Model files: UTF-8 JSON with sorted keys.

Arrays are stored as ``{"shape": [...], "data": [...]}`` with the data
flattened in row-major order. Python's float repr round-trips exactly, so
save -> load -> save reproduces the same bytes.
"""
import json
import logging

import numpy as np

from .exceptions import CorruptPayload, VersionMismatch
from .model import FeatureScaler, HiddenLayer, MlpModel, OutputLayer

logger = logging.getLogger(__name__)

FORMAT_NAME = 'activeset-mlp'
FORMAT_VERSION = 1


def _pack(array):
    array = np.asarray(array, dtype=float)
    return {'shape': list(array.shape), 'data': [float(v) for v in array.ravel()]}


def _unpack(payload):
    shape = tuple(int(s) for s in payload['shape'])
    data = np.array(payload['data'], dtype=float)
    if data.size != int(np.prod(shape)):
        raise CorruptPayload(f"array of shape {shape} holds {data.size} values")
    return data.reshape(shape)


def model_to_dict(model):
    return {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'input_dim': model.input_dim,
        'k': model.k,
        'n_bus': model.n_bus,
        'feature_buses': list(model.feature_buses),
        'label_binding': model.label_binding,
        'scaler': {'mean': _pack(model.scaler.mean), 'std': _pack(model.scaler.std)},
        'hidden': [
            {
                'W': _pack(layer.W),
                'B': _pack(layer.B),
                'gamma': _pack(layer.gamma),
                'beta': _pack(layer.beta),
                'running_mean': _pack(layer.running_mean),
                'running_var': _pack(layer.running_var),
                'momentum': layer.momentum,
                'epsilon': layer.epsilon,
                'dropout_rate': layer.dropout_rate,
            }
            for layer in model.hidden
        ],
        'output': {'W': _pack(model.output.W), 'B': _pack(model.output.B)},
        'train_config': model.train_config,
        'run_config': model.run_config,
    }


def model_from_dict(data):
    hidden = [
        HiddenLayer(
            W=_unpack(layer['W']),
            B=_unpack(layer['B']),
            gamma=_unpack(layer['gamma']),
            beta=_unpack(layer['beta']),
            running_mean=_unpack(layer['running_mean']),
            running_var=_unpack(layer['running_var']),
            momentum=float(layer['momentum']),
            epsilon=float(layer['epsilon']),
            dropout_rate=float(layer['dropout_rate']),
        )
        for layer in data['hidden']
    ]
    model = MlpModel(
        hidden=hidden,
        output=OutputLayer(W=_unpack(data['output']['W']), B=_unpack(data['output']['B'])),
        input_dim=int(data['input_dim']),
        k=int(data['k']),
        scaler=FeatureScaler(mean=_unpack(data['scaler']['mean']), std=_unpack(data['scaler']['std'])),
        label_binding=data['label_binding'],
        feature_buses=tuple(int(b) for b in data['feature_buses']),
        n_bus=int(data['n_bus']),
        train_config=data.get('train_config', {}),
        run_config=data.get('run_config', {}),
    )
    _check_shapes(model)
    return model


def _check_shapes(model):
    fan_in = model.input_dim
    for j, layer in enumerate(model.hidden):
        width = layer.W.shape[1] if layer.W.ndim == 2 else -1
        expected = [(fan_in, width), (width,), (width,), (width,), (width,), (width,)]
        actual = [a.shape for a in (layer.W, layer.B, layer.gamma, layer.beta, layer.running_mean, layer.running_var)]
        if actual != expected:
            raise CorruptPayload(f"hidden layer {j} shapes {actual} do not compose")
        if np.any(layer.running_var <= 0):
            raise CorruptPayload(f"hidden layer {j} has a non-positive running variance")
        fan_in = width
    if model.output.W.shape != (fan_in, model.k) or model.output.B.shape != (model.k,):
        raise CorruptPayload("output layer shapes do not match the class count")
    if model.scaler.mean.shape != (model.input_dim,) or model.scaler.std.shape != (model.input_dim,):
        raise CorruptPayload("feature scaler does not match the input dimension")


def save_model(model):
    payload = json.dumps(model_to_dict(model), sort_keys=True, separators=(',', ':'))
    return payload.encode('utf-8')


def load_model(payload):
    try:
        data = json.loads(payload.decode('utf-8') if isinstance(payload, bytes) else payload)
    except (UnicodeDecodeError, ValueError) as e:
        raise CorruptPayload(str(e)) from e
    if not isinstance(data, dict) or data.get('format') != FORMAT_NAME:
        raise CorruptPayload("not an activeset model file")
    if data.get('version') != FORMAT_VERSION:
        raise VersionMismatch(data.get('version'), FORMAT_VERSION)
    try:
        return model_from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptPayload(f"{type(e).__name__}: {e}") from e
