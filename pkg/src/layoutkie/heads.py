"""Task heads over encoder outputs: BIO tagging and graph-based decoding.

The graph decoder has three heads: initial-token classification (C classes
plus a trailing "not initial" class), subsequent-token classification (per
source token, a distribution over STOP and every other token), and pairwise
relation classification (independent sigmoid per ordered pair). Decoding
walks successor chains from predicted initial tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import GraphError, Params, Tensor, glorot
from .encoder import NEG_INF

__all__ = [
    "HeadConfig",
    "Entity",
    "Link",
    "init_head_params",
    "itc_logits",
    "itc_probs",
    "stc_logits",
    "stc_probs",
    "rel_logits",
    "rel_probs",
    "bio_logits",
    "decode_entities_spade",
    "decode_links",
    "decode_bio",
    "bio_tags_for_entities",
    "head_losses",
]


@dataclass
class HeadConfig:
    num_classes: int = 3          # C; itc head emits C+1 logits
    stc_dim: int = 128
    rel_dim: int = 128
    hidden: int = 64
    rel_pos_weight: float = 1.0
    link_threshold: float = 0.5

    @property
    def bio_tags(self):
        return 2 * self.num_classes + 1  # B-c, I-c per class, plus O


@dataclass(frozen=True)
class Entity:
    class_id: int
    token_ids: tuple[int, ...]

    @property
    def head(self) -> int:
        return self.token_ids[0]


@dataclass(frozen=True)
class Link:
    source: int  # head token id of the source entity
    target: int

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("link endpoints must differ")


def init_head_params(config: HeadConfig, rng: np.random.Generator, params: Params | None = None) -> Params:
    p = params if params is not None else Params()
    H, C = config.hidden, config.num_classes
    p.add("spade.itc.w", glorot(rng, H, C + 1))
    p.add("spade.stc.ws", glorot(rng, H, config.stc_dim))
    p.add("spade.stc.wt", glorot(rng, H, config.stc_dim))
    p.add("spade.stc.t_stop", glorot(rng, config.stc_dim, 1, shape=(config.stc_dim,)))
    p.add("spade.rel.ws", glorot(rng, H, config.rel_dim))
    p.add("spade.rel.wt", glorot(rng, H, config.rel_dim))
    p.add("bio.w", glorot(rng, H, config.bio_tags))
    p.add("bio.b", np.zeros(config.bio_tags, dtype=ag.get_dtype()))
    return p


def init_mlm_params(vocab: int, hidden: int, rng: np.random.Generator, params: Params | None = None) -> Params:
    p = params if params is not None else Params()
    p.add("mlm.w", (rng.standard_normal((hidden, vocab)) * 0.002).astype(ag.get_dtype()))
    p.add("mlm.b", np.zeros(vocab, dtype=ag.get_dtype()))
    return p


# ---------------------------------------------------------------------------
# head forward passes (batched: reps is [B, N, H])


def itc_logits(reps: Tensor, params: Params) -> Tensor:
    return ag.matmul(reps, params["spade.itc.w"])


def itc_probs(reps: Tensor, params: Params) -> Tensor:
    return ag.softmax(itc_logits(reps, params), axis=-1)


def stc_logits(reps: Tensor, params: Params, mask: np.ndarray) -> Tensor:
    """Logits [B, N, N+1]; index 0 is STOP, index j+1 is token j.

    Padded targets and self-links are pushed to NEG_INF so softmax assigns
    them zero probability.
    """
    B, N, _ = reps.shape
    s = ag.matmul(reps, params["spade.stc.ws"])  # [B, N, Hs]
    t = ag.matmul(reps, params["spade.stc.wt"])  # [B, N, Hs]
    tok = ag.matmul(s, ag.transpose(t, (0, 2, 1)))  # [B, N, N]
    stop = ag.matmul(s, ag.reshape(params["spade.stc.t_stop"], (-1, 1)))  # [B, N, 1]
    logits = ag.concat([stop, tok], axis=-1)

    bias = np.zeros((B, N, N + 1), dtype=ag.get_dtype())
    bias[:, :, 1:][~np.asarray(mask)[:, None, :].repeat(N, axis=1)] = NEG_INF
    eye = np.eye(N, dtype=bool)
    bias[:, :, 1:][np.broadcast_to(eye, (B, N, N))] = NEG_INF
    return ag.add_const(logits, bias)


def stc_probs(reps: Tensor, params: Params, mask: np.ndarray) -> Tensor:
    return ag.softmax(stc_logits(reps, params, mask), axis=-1)


def rel_logits(reps: Tensor, params: Params) -> Tensor:
    s = ag.matmul(reps, params["spade.rel.ws"])
    t = ag.matmul(reps, params["spade.rel.wt"])
    return ag.matmul(s, ag.transpose(t, (0, 2, 1)))  # [B, N, N]


def rel_probs(reps: Tensor, params: Params) -> Tensor:
    return ag.sigmoid(rel_logits(reps, params))


def bio_logits(reps: Tensor, params: Params) -> Tensor:
    return ag.add(ag.matmul(reps, params["bio.w"]), params["bio.b"])


# ---------------------------------------------------------------------------
# decoding (plain numpy over probability arrays for one document)


def decode_entities_spade(p_itc: np.ndarray, p_stc: np.ndarray, mask: np.ndarray) -> list[Entity]:
    """Entities from initial-token and successor predictions.

    Successor conflicts (two sources claiming one target) go to the higher
    probability, ties to the lower source id; losers fall back to STOP.
    A token classified as initial always starts its own entity, so any
    successor claim on it is dropped. After these two rules every token has
    at most one incoming edge and initial tokens have none, which makes the
    chains disjoint simple paths: the decoded entity set does not depend on
    the order tokens are presented in (matching permutations of the inputs
    permute the output). Chains stop at STOP or after N hops.
    """
    p_itc, p_stc, mask = np.asarray(p_itc), np.asarray(p_stc), np.asarray(mask)
    N = p_itc.shape[0]
    non_initial = p_itc.shape[1] - 1
    valid = np.flatnonzero(mask)

    itc = p_itc.argmax(axis=-1)
    succ = p_stc.argmax(axis=-1)  # 0 = STOP, j+1 = token j

    # conflict resolution: at most one source keeps each target
    claimed: dict[int, int] = {}
    for i in valid:
        if succ[i] == 0:
            continue
        j = succ[i] - 1
        prev = claimed.get(j)
        if prev is None:
            claimed[j] = i
        else:
            better = i if (p_stc[i, j + 1], -i) > (p_stc[prev, j + 1], -prev) else prev
            loser = prev if better is i else i
            claimed[j] = better
            succ[loser] = 0

    # initial tokens never continue another chain
    for i in valid:
        if succ[i] != 0 and itc[succ[i] - 1] != non_initial:
            succ[i] = 0

    entities = []
    visited = set()
    for i in valid:
        if itc[i] == non_initial or i in visited:
            continue
        chain = [int(i)]
        visited.add(int(i))
        cur = int(i)
        for _ in range(N):
            if succ[cur] == 0:
                break
            nxt = int(succ[cur]) - 1
            if nxt in visited or not mask[nxt]:
                break
            chain.append(nxt)
            visited.add(nxt)
            cur = nxt
        entities.append(Entity(int(itc[i]), tuple(chain)))
    return entities


def decode_links(p_rel: np.ndarray, entities: list[Entity], threshold: float = 0.5) -> list[Link]:
    """Links between entity head tokens with probability strictly above the threshold."""
    heads = [e.head for e in entities]
    out = []
    for hs in heads:
        for ht in heads:
            if hs != ht and p_rel[hs, ht] > threshold:
                out.append(Link(hs, ht))
    return out


def decode_bio(tags: list[str]) -> list[Entity]:
    """Maximal B-c (I-c)* runs; an I without a matching open B is dropped."""
    entities = []
    cur_class, cur_tokens = None, []

    def flush():
        nonlocal cur_class, cur_tokens
        if cur_tokens:
            entities.append(Entity(cur_class, tuple(cur_tokens)))
        cur_class, cur_tokens = None, []

    for i, tag in enumerate(tags):
        if tag.startswith("B-"):
            flush()
            cur_class = int(tag[2:])
            cur_tokens = [i]
        elif tag.startswith("I-") and cur_tokens and int(tag[2:]) == cur_class:
            cur_tokens.append(i)
        else:
            flush()
    flush()
    return entities


def bio_tags_for_entities(entities: list[Entity], n_tokens: int) -> list[str]:
    tags = ["O"] * n_tokens
    for e in entities:
        for k, t in enumerate(e.token_ids):
            tags[t] = f"B-{e.class_id}" if k == 0 else f"I-{e.class_id}"
    return tags


def tag_index(tag: str, num_classes: int) -> int:
    """O -> 0, B-c -> 1 + 2c, I-c -> 2 + 2c."""
    if tag == "O":
        return 0
    c = int(tag[2:])
    return 1 + 2 * c + (0 if tag.startswith("B-") else 1)


def tag_name(idx: int) -> str:
    if idx == 0:
        return "O"
    c, inner = divmod(idx - 1, 2)
    return f"{'I' if inner else 'B'}-{c}"


# ---------------------------------------------------------------------------
# losses


def head_losses(
    outputs: dict[str, Tensor],
    gold: dict[str, np.ndarray],
    mask: np.ndarray,
    rel_pos_weight: float = 1.0,
) -> Tensor:
    """Sum of the active heads' losses.

    ``outputs`` holds logits keyed by head name ('itc', 'stc', 'rel',
    'bio'); ``gold`` holds the matching labels: class per token, successor
    index per token (0 = STOP), a binary [B,N,N] link matrix, or BIO tag
    indices. Loss positions are weighted by ``mask``.
    """
    mask = np.asarray(mask, dtype=np.float64)
    total = None
    for name, logits in outputs.items():
        if name not in gold:
            raise GraphError(f"missing gold labels for head {name!r}")
        if name == "rel":
            B, N = mask.shape
            pair_w = mask[:, :, None] * mask[:, None, :] * (1.0 - np.eye(N))
            term = ag.binary_cross_entropy_with_logits(logits, gold[name], pair_w, rel_pos_weight)
        else:
            term = ag.cross_entropy(logits, gold[name], mask)
        total = term if total is None else ag.add(total, term)
    if total is None:
        raise GraphError("head_losses called with no heads")
    return total
