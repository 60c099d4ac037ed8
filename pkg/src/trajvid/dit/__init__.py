from .model import Denoiser, DiTBlock, FusionBlock, MultiHeadAttention, TokenSequence
from .text import TextEncoder, build_vocabulary, tokenize, sinusoidal_embedding
from .checkpoint import save_checkpoint, load_checkpoint, restore_model

__all__ = [
    "Denoiser", "DiTBlock", "FusionBlock", "MultiHeadAttention", "TokenSequence",
    "TextEncoder", "build_vocabulary", "tokenize", "sinusoidal_embedding",
    "save_checkpoint", "load_checkpoint", "restore_model",
]
