"""Model persistence.

One JSON document holds everything a tagger needs to run: the shape
spec, every parameter bundle, the embedding table with its vocabulary,
the feature channel setup, and the tagset.  Keys are sorted and floats
use shortest round-trip notation, so saving the same model twice yields
byte-identical files and load(save(m)) reproduces every array exactly.
"""

import json

import numpy as np

from .architectures import ModelSpec
from .corpus import Lexicon, Vocabulary
from .model import Model
from .representation import EmbeddingTable, FeatureConfig

MODEL_FORMAT = "rnn-mention-tagger"
MODEL_VERSION = 1


def _lexicon_obj(lex):
    return {"name": lex.name, "entries": sorted(lex.entries)}


def _params_obj(params):
    return {bundle: {name: arr.tolist() for name, arr in grads.items()}
            for bundle, grads in params.items()}


def model_to_obj(model):
    spec = model.spec
    fconf = model.fconf
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": {
            "arch": spec.arch,
            "n_in": spec.n_in,
            "hidden": spec.hidden,
            "n_tags": spec.n_tags,
            "decoder_cell": spec.decoder_cell,
            "encoder_cell": spec.encoder_cell,
            "mesnil_k": spec.mesnil_k,
            "bias": spec.bias,
            "gru_candidate": spec.gru_candidate,
        },
        "tagset": list(model.tagset),
        "scheme": model.scheme,
        "v_c": model.v_c,
        "features": {
            "capitalization": fconf.capitalization,
            "gazetteers": [_lexicon_obj(g) for g in fconf.gazetteers],
            "trigger": _lexicon_obj(fconf.trigger) if fconf.trigger else None,
            "cache_tagset": list(fconf.cache_tagset) if fconf.cache_tagset else None,
        },
        "vocab": {
            "words": list(model.table.vocab.index_to_word),
            "lowercase": model.table.vocab.lowercase,
            "digits_to_zero": model.table.vocab.digits_to_zero,
        },
        "embedding": {
            "dim": model.table.dim,
            "trainable": model.table.trainable,
            "matrix": model.table.matrix.tolist(),
        },
        "params": _params_obj(model.params),
    }


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_obj(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def model_from_obj(obj):
    if obj.get("format") != MODEL_FORMAT:
        raise ValueError("not a model file (format tag %r)" % obj.get("format"))
    if obj.get("version") != MODEL_VERSION:
        raise ValueError("unsupported model version %r" % obj.get("version"))

    spec = ModelSpec(**obj["spec"])
    v = obj["vocab"]
    vocab = Vocabulary(index_to_word=list(v["words"]),
                       lowercase=v["lowercase"],
                       digits_to_zero=v["digits_to_zero"])
    emb = obj["embedding"]
    table = EmbeddingTable(vocab, emb["dim"],
                           np.array(emb["matrix"], dtype=np.float64),
                           trainable=emb["trainable"])
    f = obj["features"]
    trigger = f["trigger"]
    fconf = FeatureConfig(
        capitalization=f["capitalization"],
        gazetteers=[Lexicon(g["name"], set(g["entries"])) for g in f["gazetteers"]],
        trigger=Lexicon(trigger["name"], set(trigger["entries"])) if trigger else None,
        cache_tagset=list(f["cache_tagset"]) if f["cache_tagset"] else None,
    )
    params = {bundle: {name: np.array(arr, dtype=np.float64)
                       for name, arr in grads.items()}
              for bundle, grads in obj["params"].items()}
    return Model(spec=spec, params=params, table=table, fconf=fconf,
                 tagset=list(obj["tagset"]), scheme=obj["scheme"],
                 v_c=obj["v_c"])


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return model_from_obj(obj)
