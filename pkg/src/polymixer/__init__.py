"""Polynomial Mixer: a linear-time, permutation-equivariant token mixer, with
causal and block-causal streaming, an attention baseline, gradients, and a
multiplication-count cost model."""
from .baseline import AttentionParams, mha_forward
from .block import (FeedForwardParams, PolyMorpherParams, StackParams, feed_forward,
                    polymorpher_forward, stack_forward)
from .cost import CostReport, cost_report, crossover_n, flops_mha, flops_pom
from .gradcheck import GradientBundle, finite_difference, pom_backward
from .mixer import (MaskSpec, MixerConfig, MixerParams, StreamState, pom_forward,
                    poly_features, readout, state_full, state_masked, stream_block_step,
                    stream_init, stream_step)

__version__ = "0.1.0"

__all__ = [
    "AttentionParams", "CostReport", "FeedForwardParams", "GradientBundle", "MaskSpec",
    "MixerConfig", "MixerParams", "PolyMorpherParams", "StackParams", "StreamState",
    "cost_report", "crossover_n", "feed_forward", "finite_difference", "flops_mha",
    "flops_pom", "mha_forward", "pom_backward", "pom_forward", "poly_features",
    "polymorpher_forward", "readout", "stack_forward", "state_full", "state_masked",
    "stream_block_step", "stream_init", "stream_step",
]
