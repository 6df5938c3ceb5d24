"""Neural translation of acts: encoder-decoder with attention."""
from .checkpoint import load_model, save_model
from .decode import BeamConfig, beam_search, greedy_decode
from .metrics import accuracy, bleu, mean_bleu, self_bleu
from .model import ModelDims, Qep2SeqModel, attend, lstm_step
from .train import TrainConfig, TrainResult, build_model, teacher_forcing_accuracy, teacher_forcing_ceiling, train
from .vocab import Vocab

__all__ = [
    "BeamConfig", "ModelDims", "Qep2SeqModel", "TrainConfig", "TrainResult", "Vocab",
    "accuracy", "attend", "beam_search", "bleu", "build_model", "greedy_decode",
    "load_model", "lstm_step", "mean_bleu", "save_model", "self_bleu",
    "teacher_forcing_accuracy", "teacher_forcing_ceiling", "train",
]
