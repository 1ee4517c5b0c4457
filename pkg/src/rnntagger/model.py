"""Trained-model container and whole-corpus tagging."""

from dataclasses import dataclass

from . import architectures
from .representation import DocCache, encode_sentence


@dataclass
class Model:
    spec: architectures.ModelSpec
    params: dict
    table: object            # EmbeddingTable
    fconf: object            # FeatureConfig
    tagset: list
    scheme: str
    v_c: int = 5

    @property
    def tag_to_index(self):
        return {t: i for i, t in enumerate(self.tagset)}

    def encode_input(self, sentence, doc_state=None):
        return encode_sentence(sentence, self.table, self.fconf, self.v_c, doc_state)


def tag_sentence(model, sentence, doc_state=None):
    enc_in = model.encode_input(sentence, doc_state)
    return architectures.predict_tags(model.spec, model.params, enc_in.xs, model.tagset)


def tag_corpus(model, sentences):
    """Tag sentences in corpus order, one tag list per sentence.

    The label cache, when enabled, is document-scoped: it resets at every
    document boundary and is fed the model's own predictions, so sentence
    order within a document matters.
    """
    t2i = model.tag_to_index
    doc_state = DocCache() if model.fconf.uses_cache else None
    prev_doc = None
    out = []
    for sent in sentences:
        if doc_state is not None and sent.doc_id != prev_doc:
            doc_state.reset()
        tags = tag_sentence(model, sent, doc_state)
        if doc_state is not None:
            doc_state.update_sentence(sent, tags, t2i)
        out.append(tags)
        prev_doc = sent.doc_id
    return out
