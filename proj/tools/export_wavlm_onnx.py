#!/usr/bin/env python3
"""Exports a WavLM x-vector speaker model to ONNX for `vceval --embedding-model`.

  python3 tools/export_wavlm_onnx.py --out wavlm-sv.onnx
  python3 tools/export_wavlm_onnx.py --checkpoint /path/to/local/copy --out m.onnx
  python3 tools/export_wavlm_onnx.py --random-init --out tiny.onnx   # no download

The exported graph has one input `waveform` [1, samples] (float32, 16 kHz)
and one output `embedding` [1, D], which is what the loader expects.
The feature extractor's zero-mean / unit-variance normalization is folded
into the graph so the caller passes raw samples.
"""

import argparse

import torch
from transformers import WavLMConfig, WavLMForXVector

DEFAULT_CHECKPOINT = "microsoft/wavlm-base-plus-sv"


class Wrapper(torch.nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, waveform):
        x = waveform - waveform.mean(dim=1, keepdim=True)
        x = x / torch.sqrt(x.pow(2).mean(dim=1, keepdim=True) + 1e-7)
        return self.model(input_values=x).embeddings


def tiny_config():
    return WavLMConfig(hidden_size=64, num_hidden_layers=2, num_attention_heads=2,
                       intermediate_size=128, conv_dim=(32,) * 7, tdnn_dim=(32, 32, 32, 32, 64),
                       xvector_output_dim=32, num_buckets=32, max_bucket_distance=100)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--checkpoint", default=DEFAULT_CHECKPOINT)
    ap.add_argument("--random-init", action="store_true",
                    help="small untrained model, for checking the export path offline")
    ap.add_argument("--out", required=True)
    ap.add_argument("--opset", type=int, default=17)
    args = ap.parse_args()

    if args.random_init:
        torch.manual_seed(0)
        model = WavLMForXVector(tiny_config())
    else:
        model = WavLMForXVector.from_pretrained(args.checkpoint)
    model.eval()
    wrapper = Wrapper(model).eval()

    dummy = torch.randn(1, 32000)
    with torch.no_grad():
        torch.onnx.export(
            wrapper, (dummy,), args.out,
            input_names=["waveform"], output_names=["embedding"],
            dynamic_axes={"waveform": {1: "samples"}},
            opset_version=args.opset, do_constant_folding=True, dynamo=False)
        dim = wrapper(dummy).shape[-1]
    print(f"wrote {args.out} (embedding dim {dim})")


if __name__ == "__main__":
    main()
