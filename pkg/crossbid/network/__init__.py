from crossbid.network._config import ModelConfig
from crossbid.network.attention import attend, attention_mask, masked_cross_attention
from crossbid.network.clb import clb_dt_forward, clb_forward
from crossbid.network.forward import extract_block1_embedding, model_forward
from crossbid.network.layers import encode_inputs
from crossbid.network.params import init_params, loss_free_params
from crossbid.network.rollout import DecisionTransformerPolicy, conditioning_rtg, rollout_inference
from crossbid.network.vanilla import vanilla_dt_forward

__all__ = [
    "DecisionTransformerPolicy",
    "ModelConfig",
    "attend",
    "attention_mask",
    "clb_dt_forward",
    "clb_forward",
    "conditioning_rtg",
    "encode_inputs",
    "extract_block1_embedding",
    "init_params",
    "loss_free_params",
    "masked_cross_attention",
    "model_forward",
    "rollout_inference",
    "vanilla_dt_forward",
]
