#!/usr/bin/env python3
"""Builds the tiny ONNX graphs used by the model-mode tests.

  python3 tools/make_test_models.py [--out tests/data/models]

stats_embed.onnx   waveform [1, N] -> embedding [1, 8]
two_inputs.onnx    two waveform inputs (rejected by the loader)
rank1_output.onnx  embedding of shape [8] (rejected by the loader)
"""

import argparse
import os

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

OPSET = 13
IR_VERSION = 8


def stats_graph(name, inputs, out_shape):
    x = inputs[0].name
    nodes = [
        helper.make_node("ReduceMean", [x], ["mean"], axes=[1], keepdims=1),
        helper.make_node("Mul", [x, x], ["sq"]),
        helper.make_node("ReduceMean", ["sq"], ["power"], axes=[1], keepdims=1),
        helper.make_node("Abs", [x], ["absx"]),
        helper.make_node("ReduceMean", ["absx"], ["mabs"], axes=[1], keepdims=1),
        helper.make_node("ReduceMax", [x], ["peak"], axes=[1], keepdims=1),
        helper.make_node("Concat", ["mean", "power", "mabs", "peak"], ["stats"], axis=1),
        helper.make_node("MatMul", ["stats", "w"], ["proj"]),
        helper.make_node("Add", ["proj", "b"], ["emb2d"]),
    ]
    rng = np.random.default_rng(7)
    w = rng.standard_normal((4, 8)).astype(np.float32)
    b = np.linspace(0.1, 0.8, 8, dtype=np.float32)
    inits = [numpy_helper.from_array(w, "w"), numpy_helper.from_array(b, "b")]
    if out_shape == [8]:
        nodes.append(helper.make_node("Flatten", ["emb2d"], ["flat"], axis=0))
        nodes.append(helper.make_node("Reshape", ["flat", "shape"], ["embedding"]))
        inits.append(numpy_helper.from_array(np.array([8], dtype=np.int64), "shape"))
    else:
        nodes.append(helper.make_node("Identity", ["emb2d"], ["embedding"]))
    output = helper.make_tensor_value_info("embedding", TensorProto.FLOAT, out_shape)
    graph = helper.make_graph(nodes, name, inputs, [output], inits)
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", OPSET)])
    model.ir_version = IR_VERSION
    onnx.checker.check_model(model)
    return model


def waveform(name="waveform"):
    return helper.make_tensor_value_info(name, TensorProto.FLOAT, [1, "samples"])


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(here, "..", "tests", "data", "models"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    models = {
        "stats_embed.onnx": stats_graph("stats_embed", [waveform()], [1, 8]),
        "two_inputs.onnx": stats_graph("two_inputs", [waveform(), waveform("aux")], [1, 8]),
        "rank1_output.onnx": stats_graph("rank1_output", [waveform()], [8]),
    }
    for fname, model in models.items():
        onnx.save(model, os.path.join(args.out, fname))
        print("wrote", fname)


if __name__ == "__main__":
    main()
