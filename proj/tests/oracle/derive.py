"""Independent numpy computation of the regression constants frozen in the C++ tests.

Run: python3 tests/oracle/derive.py
Nothing here shares code with the engine; every model space is enumerated
with itertools and every law is built by explicit sums over assignments.
"""

import collections
import itertools
import math

import numpy as np

BINS = 41
SLACK = 1e-12


def grid_params(levels, count):
    idx = np.array(list(itertools.product(range(len(levels)), repeat=count)))
    return np.asarray(levels)[idx]


def bern(p, v):
    return p if v else 1 - p


def entropy(taus):
    b = np.clip(np.floor((np.asarray(taus) + 1) / 2 * BINS).astype(int), 0, BINS - 1)
    c = np.bincount(b, minlength=BINS) / len(b)
    c = c[c > 0]
    return float(max(0.0, -(c * np.log2(c)).sum()))


def kl_bits(p, q):
    p, q = np.asarray(p), np.asarray(q)
    m = p > 0
    return float((p[m] * np.log2(p[m] / q[m])).sum())


def tv(a, b):
    return 0.5 * np.abs(a - b).sum(axis=-1)


# ------------------------------------------------------------------ fig1
# parameters: U | X|U=0, X|U=1 | T|X=0, T|X=1 | Y|(U,T)=00,01,10,11
# observed cells X,T,Y with X the most significant bit


def fig1_observed(P):
    pu, px, pt, py = P[:, 0], P[:, 1:3], P[:, 3:5], P[:, 5:9]
    out = np.zeros((len(P), 8))
    for u, x, t, y in itertools.product((0, 1), repeat=4):
        w = (np.where(u, pu, 1 - pu) * np.where(x, px[:, u], 1 - px[:, u])
             * np.where(t, pt[:, x], 1 - pt[:, x])
             * np.where(y, py[:, u * 2 + t], 1 - py[:, u * 2 + t]))
        out[:, x * 4 + t * 2 + y] += w
    return out


def fig1_tau(P):
    pu, py = P[:, 0], P[:, 5:9]
    return pu * (py[:, 3] - py[:, 2]) + (1 - pu) * (py[:, 1] - py[:, 0])


def restrict_x1(O):
    part = O[:, 4:]
    s = part.sum(axis=1)
    ok = s > 0
    out = np.zeros((len(O), 8))
    out[ok, 4:] = part[ok] / s[ok, None]
    return out, ok


def fig1():
    truth = np.array([[.5, .25, .75, .25, .75, .25, .5, .5, .75]])
    ref = fig1_observed(truth)[0]
    print("fig1 observed", ref.tolist())
    print("fig1 truth tau", fig1_tau(truth)[0])
    print("fig1 P(X=1)", ref[4:].sum())

    P = grid_params([0, .25, .5, .75, 1], 9)
    O, T = fig1_observed(P), fig1_tau(P)
    origin = tv(O, ref) <= 0.02 + SLACK
    print("fig1 origin admissible", origin.sum(), T[origin].min(), T[origin].max(),
          "members", np.nonzero(origin)[0].tolist())
    rref, _ = restrict_x1(ref[None, :])
    R, ok = restrict_x1(O)
    rmatch = ok & (tv(R, rref[0]) <= 0.02 + SLACK)
    nested = origin & rmatch
    print("fig1 RC admissible", nested.sum())
    print("fig1 restricted-only evidence", rmatch.sum(), T[rmatch].min(), T[rmatch].max(),
          "H", entropy(T[rmatch]))
    print("fig1 KL restricted vs full", kl_bits(rref[0], ref))
    print("fig1 origin exact matches", (tv(O, ref) <= SLACK).sum())
    key = np.round(O / 1e-6).astype(np.int64)
    print("fig1 step0.25 fingerprint cells", len({tuple(k) for k in key}))

    P5 = grid_params([0, .5, 1], 9)
    T5 = fig1_tau(P5)
    print("fig1 step0.5 models", len(P5), "tau==1", int((np.abs(T5 - 1) < 1e-12).sum()),
          "tau==-1", int((np.abs(T5 + 1) < 1e-12).sum()))
    key5 = np.round(fig1_observed(P5) / 1e-6).astype(np.int64)
    print("fig1 step0.5 fingerprint cells", len({tuple(k) for k in key5}))

    # adjustment over {X} on the full table equals tau for the truth
    o = ref.reshape(2, 2, 2)
    est = sum(o[x].sum() * (o[x, 1, 1] / o[x, 1].sum() - o[x, 0, 1] / o[x, 0].sum()) for x in (0, 1))
    print("fig1 CR estimate", est)


# ------------------------------------------------------------------ s2
# parameters: U | X|U | T|(U,X) 00..11 | Y|(U,T) 00..11


def s2_observed(P):
    pu, px, pt, py = P[:, 0], P[:, 1:3], P[:, 3:7], P[:, 7:11]
    out = np.zeros((len(P), 8))
    for u, x, t, y in itertools.product((0, 1), repeat=4):
        w = (np.where(u, pu, 1 - pu) * np.where(x, px[:, u], 1 - px[:, u])
             * np.where(t, pt[:, u * 2 + x], 1 - pt[:, u * 2 + x])
             * np.where(y, py[:, u * 2 + t], 1 - py[:, u * 2 + t]))
        out[:, x * 4 + t * 2 + y] += w
    return out


def s2_tau(P):
    pu, py = P[:, 0], P[:, 7:11]
    return pu * (py[:, 3] - py[:, 2]) + (1 - pu) * (py[:, 1] - py[:, 0])


def s2():
    truth = np.array([[.5, .5, 1, .5, .5, .5, 1, .5, .5, .5, 1]])
    ref = s2_observed(truth)[0]
    print("s2 observed", ref.tolist(), "truth tau", s2_tau(truth)[0])
    P = grid_params([0, .5, 1], 11)
    O, T = s2_observed(P), s2_tau(P)
    origin = tv(O, ref) <= 0.02 + SLACK
    print("s2 origin admissible", origin.sum(), T[origin].min(), T[origin].max(),
          "H", entropy(T[origin]))
    o = ref.reshape(2, 2, 2)
    est = sum(o[x].sum() * (o[x, 1, 1] / o[x, 1].sum() - o[x, 0, 1] / o[x, 0].sum()) for x in (0, 1))
    print("s2 CR estimate", est)

    key = np.round(O / 1e-6).astype(np.int64)
    cells = collections.defaultdict(list)
    for i, k in enumerate(map(tuple, key)):
        cells[k].append(i)
    keys = list(cells)
    laws = np.array([O[cells[k][0]] for k in keys])
    taus = [T[cells[k]] for k in keys]
    print("s2 fingerprint cells", len(keys))

    def around(law):
        nb = np.nonzero(tv(laws, law) <= 0.02 + SLACK)[0]
        return entropy(np.concatenate([taus[b] for b in nb]))

    k_pop = min(around(O[i]) for i in np.nonzero(origin)[0])
    k_class = min(around(laws[a]) for a in range(len(keys)))
    print("s2 k", repr(k_pop), "k_class", k_class)


# ------------------------------------------------------------------ trial
# V, T|V, A|(V,T), Y|(V,T); observed cells V,T,A,Y with V the most significant


def trial_world(pv, pt, pa, py, do_t=None):
    w = np.zeros(16)
    for v, t, a, y in itertools.product((0, 1), repeat=4):
        ptv = pt[v] if do_t is None else do_t
        w[v * 8 + t * 4 + a * 2 + y] = (bern(pv, v) * bern(ptv, t) * bern(pa[v * 2 + t], a)
                                        * bern(py[v * 2 + t], y))
    return w


def trial():
    pv, pt, pa, py = .5, [.25, .75], [.5, .25, .75, .5], [.25, .5, .25, .75]
    full = trial_world(pv, pt, pa, py)
    tau = sum(bern(pv, v) * (py[v * 2 + 1] - py[v * 2]) for v in (0, 1))
    print("trial truth tau", tau)
    # restrict V=1
    r1 = full.copy()
    r1[:8] = 0
    r1 /= r1.sum()
    # intervene T p=0.5 inside the restricted world: V keeps its law
    r2 = trial_world(1.0, pt, pa, py, do_t=0.5)
    # restrict A=1
    r3 = r2.copy()
    for c in range(16):
        if not (c >> 1) & 1:
            r3[c] = 0
    r3 /= r3.sum()
    print("trial KL per step", kl_bits(r1, full), kl_bits(r2, full), kl_bits(r3, full))
    # randomization identity on the truth: crude RD after do(T=0.5) equals tau
    w = trial_world(pv, pt, pa, py, do_t=0.5).reshape(2, 2, 2, 2)
    py1 = w[:, 1, :, 1].sum() / w[:, 1].sum()
    py0 = w[:, 0, :, 1].sum() / w[:, 0].sum()
    print("trial RD after randomization", py1 - py0)


def independent():
    print("independent KL after A=1,B=1", math.log2(1 / (0.5 * 0.75)),
          "after B=1", math.log2(1 / 0.75))


if __name__ == "__main__":
    fig1()
    s2()
    trial()
    independent()
