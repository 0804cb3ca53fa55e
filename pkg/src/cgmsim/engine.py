"""Stage game played on the friend network each round.

Every agent gets one posting opportunity per round; posted articles are then
read, commented on, and answered with meta-comments by the author.  An
agent's strategy is the triple (posting rate B, comment rate L, quality Q),
quantized to eight levels per gene and carried as a 9-bit genome.

Event probabilities and the cost / psychological-reward schedule:

    post          B * Q_min / Q          costs  c0 = c_ref * Q, pays the
                                         monetary reward per the MR strategy
    read          Q_author / s_reader    rewards r0 = c0 * mu
    comment       L_reader * Q_author    costs  c1 = c_ref * delta,
                                         rewards the author r1 = c1 * mu
    meta-comment  L_author * Q_author    costs  c2 = c1 * delta,
                                         rewards the commenter r2 = c2 * mu

where s_reader is the number of articles posted this round by the reader's
neighbours.  Utility is (1 - M) * R + M * K - C with M the agent's monetary
preference, R / K / C the accumulated psychological reward, monetary reward,
and cost.

Rounds are resolved in two phases (all posts first, then all reads) so that
s_reader is well defined, and every stochastic decision consumes exactly one
uniform draw in a fixed order; see ``cgmsim._kernels`` for the draw contract
shared by the compiled and pure-Python executors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .network import Graph

GENE_BITS = 3
GENOME_BITS = 9
N_LEVELS = 8
LEVEL_STEP = 1.0 / N_LEVELS
Q_MIN = LEVEL_STEP
GENERATION_ROUNDS = 4

_GENE_MASK = N_LEVELS - 1


@dataclass(frozen=True)
class Genome:
    """Quantized strategy triple; each gene level 0..7 decodes to (level+1)/8."""

    b_level: int
    l_level: int
    q_level: int

    def __post_init__(self):
        for name in ("b_level", "l_level", "q_level"):
            v = getattr(self, name)
            if not 0 <= v < N_LEVELS:
                raise ValueError(f"{name} must be in 0..{N_LEVELS - 1}, got {v}")

    @property
    def b(self) -> float:
        return (self.b_level + 1) * LEVEL_STEP

    @property
    def l(self) -> float:
        return (self.l_level + 1) * LEVEL_STEP

    @property
    def q(self) -> float:
        return (self.q_level + 1) * LEVEL_STEP

    def to_bits(self) -> int:
        """Pack into 9 bits: b in bits 0-2, l in 3-5, q in 6-8."""
        return self.b_level | self.l_level << GENE_BITS | self.q_level << 2 * GENE_BITS

    @classmethod
    def from_bits(cls, bits: int) -> "Genome":
        if not 0 <= bits < (1 << GENOME_BITS):
            raise ValueError(f"genome bits out of range: {bits}")
        return cls(
            bits & _GENE_MASK,
            bits >> GENE_BITS & _GENE_MASK,
            bits >> 2 * GENE_BITS & _GENE_MASK,
        )


def bits_to_values(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decode packed genomes to (B, L, Q) float arrays."""
    b = ((bits & _GENE_MASK).astype(np.int64) + 1) * LEVEL_STEP
    l = ((bits >> GENE_BITS & _GENE_MASK).astype(np.int64) + 1) * LEVEL_STEP
    q = ((bits >> 2 * GENE_BITS & _GENE_MASK).astype(np.int64) + 1) * LEVEL_STEP
    return b, l, q


def levels_to_bits(b_levels, l_levels, q_levels) -> np.ndarray:
    b = np.asarray(b_levels, dtype=np.uint16)
    l = np.asarray(l_levels, dtype=np.uint16)
    q = np.asarray(q_levels, dtype=np.uint16)
    return b | l << GENE_BITS | q << 2 * GENE_BITS


@dataclass(frozen=True)
class AgentProfile:
    """Innate traits: monetary preference m in [0, 1], fixed for a whole run."""

    id: int
    m: float

    def __post_init__(self):
        if not 0.0 <= self.m <= 1.0:
            raise ValueError(f"m must be in [0, 1], got {self.m}")

    @property
    def group(self) -> str:
        """'alpha' prefers psychological rewards (m < 0.5), 'beta' monetary."""
        return "alpha" if self.m < 0.5 else "beta"


@dataclass(frozen=True)
class GameParams:
    """Cost/reward constants of the stage game.

    pi may be zero (no monetary reward); everything else is strictly
    positive, and q_min is pinned to the smallest decodable quality so that
    the post probability B * q_min / Q never exceeds B.
    """

    c_ref: float = 1.0
    mu: float = 8.0
    delta: float = 0.5
    pi: float = 1.0
    q_min: float = Q_MIN

    def __post_init__(self):
        for name in ("c_ref", "mu", "delta"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if not self.pi >= 0.0:
            raise ValueError("pi must be >= 0")
        if self.q_min != Q_MIN:
            raise ValueError(f"q_min must equal the smallest decodable quality {Q_MIN}")


class MRStrategy:
    """Platform rule deciding the monetary payout for a posted article.

    Subclasses implement ``payout``; those whose payout is a constant per
    post should also report it via ``constant_payout`` so the round executor
    can use the compiled fast path.  Payouts tied to comments or
    meta-comments are an extension point, not part of the shipped rules.
    """

    def constant_payout(self, params: GameParams) -> float | None:
        return None

    def payout(self, params: GameParams, author: int, quality: float) -> float:
        raise NotImplementedError


class PerPostReward(MRStrategy):
    """Pays pi for every article posted, regardless of quality."""

    def constant_payout(self, params: GameParams) -> float | None:
        return params.pi

    def payout(self, params: GameParams, author: int, quality: float) -> float:
        return params.pi


class WorldState:
    """Per-agent accumulators for one world, zeroed at each generation start."""

    COUNTER_NAMES = (
        "posts_made",
        "reads_made",
        "comments_made",
        "comments_received",
        "meta_comments_made",
        "meta_comments_received",
    )

    def __init__(self, n: int):
        self.R = np.zeros(n)
        self.K = np.zeros(n)
        self.C = np.zeros(n)
        self.posts_made = np.zeros(n, dtype=np.int64)
        self.reads_made = np.zeros(n, dtype=np.int64)
        self.comments_made = np.zeros(n, dtype=np.int64)
        self.comments_received = np.zeros(n, dtype=np.int64)
        self.meta_comments_made = np.zeros(n, dtype=np.int64)
        self.meta_comments_received = np.zeros(n, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.R.shape[0]

    def reset(self) -> None:
        for arr in (self.R, self.K, self.C):
            arr[:] = 0.0
        for name in self.COUNTER_NAMES:
            getattr(self, name)[:] = 0

    def counters(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.COUNTER_NAMES}


@dataclass(frozen=True)
class ArticleRecord:
    author: int
    quality: float
    readers: tuple[int, ...]
    commenters: tuple[int, ...]
    meta_commented: tuple[int, ...]


@dataclass(frozen=True)
class RoundLog:
    """What happened in one round; commenters of an article are always a
    subset of its readers, and meta-commented agents of its commenters."""

    articles: tuple[ArticleRecord, ...]
    posts: int
    reads: int
    comments: int
    meta_comments: int

    def iter_events(self, round_index: int = 0):
        """Flat (round, author, reader, event_type) tuples; post events carry
        the author in both id slots."""
        for art in self.articles:
            yield round_index, art.author, art.author, "post"
            commenters = set(art.commenters)
            metad = set(art.meta_commented)
            for reader in art.readers:
                yield round_index, art.author, reader, "read"
                if reader in commenters:
                    yield round_index, art.author, reader, "comment"
                    if reader in metad:
                        yield round_index, art.author, reader, "meta_comment"


def write_event_log(logs: Iterable[RoundLog], path) -> None:
    """Line-oriented trace: `round,author,reader,event_type`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("round,author,reader,event_type\n")
        for r, log in enumerate(logs):
            for rec in log.iter_events(r):
                fh.write("%d,%d,%d,%s\n" % rec)


# --- probability and accounting kernels (scalar reference forms) ---


def post_probability(b: float, q: float, q_min: float = Q_MIN) -> float:
    """Chance of posting: b * q_min / q, at most b since q >= q_min."""
    if not q_min > 0.0:
        raise ValueError("q_min must be > 0")
    if q < q_min:
        raise ValueError(f"quality {q} below minimum {q_min}")
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"posting rate {b} outside [0, 1]")
    return (b * q_min) / q


def read_probability(q_author: float, s_reader: int) -> float:
    """Chance a reader opens one given article among s_reader available."""
    if s_reader < 0:
        raise ValueError("s_reader must be >= 0")
    if s_reader == 0:
        return 0.0
    return min(1.0, q_author / s_reader)


def comment_probability(l_reader: float, q_author: float) -> float:
    if not (0.0 <= l_reader <= 1.0 and 0.0 <= q_author <= 1.0):
        raise ValueError("comment inputs must lie in [0, 1]")
    return l_reader * q_author


def meta_comment_probability(l_author: float, q_author: float) -> float:
    return comment_probability(l_author, q_author)


def costs(params: GameParams, q: float) -> tuple[float, float, float]:
    """(post, comment, meta-comment) costs for an article of quality q."""
    c0 = params.c_ref * q
    c1 = params.c_ref * params.delta
    c2 = c1 * params.delta
    return c0, c1, c2


def psych_rewards(params: GameParams, q: float) -> tuple[float, float, float]:
    """(read, comment, meta-comment) psychological rewards, mu times cost."""
    c0, c1, c2 = costs(params, q)
    return c0 * params.mu, c1 * params.mu, c2 * params.mu


def utility(profile: AgentProfile, r: float, k: float, c: float) -> float:
    if not (math.isfinite(r) and math.isfinite(k) and math.isfinite(c)):
        raise ValueError("utility inputs must be finite")
    return (1.0 - profile.m) * r + profile.m * k - c


# --- round execution ---


def _blq_arrays(genomes, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(genomes, np.ndarray):
        if genomes.shape != (n,):
            raise ValueError(f"genome array must have shape ({n},)")
        return bits_to_values(genomes)
    if len(genomes) != n:
        raise ValueError(f"need one genome per agent ({n})")
    levels = np.array([(g.b_level, g.l_level, g.q_level) for g in genomes], dtype=np.int64)
    b = (levels[:, 0] + 1) * LEVEL_STEP
    l = (levels[:, 1] + 1) * LEVEL_STEP
    q = (levels[:, 2] + 1) * LEVEL_STEP
    return b, l, q


def _m_array(profiles, n: int) -> np.ndarray:
    if isinstance(profiles, np.ndarray):
        if profiles.shape != (n,):
            raise ValueError(f"profile array must have shape ({n},)")
        return profiles
    if len(profiles) != n:
        raise ValueError(f"need one profile per agent ({n})")
    return np.array([p.m for p in profiles])


def _play(graph: Graph, genomes, params: GameParams, mr: MRStrategy,
          state: WorldState, rng: np.random.Generator, n_rounds: int,
          record: bool, read_reward_recipient: str):
    if read_reward_recipient not in ("reader", "author"):
        raise ValueError("read_reward_recipient must be 'reader' or 'author'")
    n = graph.node_count
    if state.n != n:
        raise ValueError("state size does not match graph")
    b, l, q = _blq_arrays(genomes, n)
    indptr, indices = graph.to_csr()

    p_post = (b * params.q_min) / q
    c0 = params.c_ref * q
    r0 = c0 * params.mu
    c1 = params.c_ref * params.delta
    c2 = c1 * params.delta
    r1 = c1 * params.mu
    r2 = c2 * params.mu

    const = mr.constant_payout(params)
    if const is None:
        # Custom payout rules go through the pure executor, which can call
        # back into Python per post.
        impl = _kernels.purepy
        payout, payout_fn = 0.0, (lambda i: float(mr.payout(params, i, q[i])))
    else:
        impl = _kernels.active()
        payout, payout_fn = float(const), None

    kwargs = {"payout_fn": payout_fn} if payout_fn is not None else {}
    events = impl.play_rounds(
        indptr, indices, p_post, q, l, c0, r0,
        float(c1), float(c2), float(r1), float(r2),
        payout, read_reward_recipient == "author",
        state.R, state.K, state.C,
        state.posts_made, state.reads_made,
        state.comments_made, state.comments_received,
        state.meta_comments_made, state.meta_comments_received,
        rng, n_rounds, record, **kwargs)
    return events, q


def _assemble_log(round_events, q: np.ndarray) -> RoundLog:
    posts, reads, comments, metas = round_events
    readers: dict[int, list[int]] = {a: [] for a in posts}
    commenters: dict[int, list[int]] = {a: [] for a in posts}
    metad: dict[int, list[int]] = {a: [] for a in posts}
    for a, j in reads:
        readers[a].append(j)
    for a, j in comments:
        commenters[a].append(j)
    for a, j in metas:
        metad[a].append(j)
    articles = tuple(
        ArticleRecord(a, float(q[a]), tuple(readers[a]), tuple(commenters[a]), tuple(metad[a]))
        for a in posts
    )
    return RoundLog(articles, len(posts), len(reads), len(comments), len(metas))


def run_round(graph: Graph, genomes, profiles, params: GameParams, mr: MRStrategy,
              state: WorldState, rng: np.random.Generator,
              read_reward_recipient: str = "reader") -> RoundLog:
    """Play one round, accumulating into ``state``, and log what happened."""
    _m_array(profiles, graph.node_count)  # length check only
    events, q = _play(graph, genomes, params, mr, state, rng, 1, True,
                      read_reward_recipient)
    return _assemble_log(events[0], q)


def run_generation(graph: Graph, genomes, profiles, params: GameParams,
                   mr: MRStrategy, rng: np.random.Generator,
                   state: WorldState | None = None,
                   rounds: int = GENERATION_ROUNDS,
                   read_reward_recipient: str = "reader") -> np.ndarray:
    """Zero a world state, play ``rounds`` rounds, and return per-agent utility.

    Passing ``state`` reuses the buffers and leaves the generation's
    accumulators inspectable afterwards.
    """
    n = graph.node_count
    if state is None:
        state = WorldState(n)
    state.reset()
    _play(graph, genomes, params, mr, state, rng, rounds, False,
          read_reward_recipient)
    m = _m_array(profiles, n)
    return (1.0 - m) * state.R + m * state.K - state.C
