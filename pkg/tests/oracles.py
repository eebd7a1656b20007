"""Brute-force reference implementations used only by the tests.

Each oracle follows the textbook definition directly and makes no attempt
to be fast.
"""

from __future__ import annotations

from stackgram.lang import Call, Con, Term, Var


# Turchin relation on plain prefix traces ---------------------------------------------


def plain_turchin_oracle(trace, i: int, j: int) -> bool:
    """Some split ``Γ_i = ΦΘ`` and ``Γ_j = Φ'ΨΘ`` with plain(Φ) = plain(Φ') and Θ untouched over [i, j]."""
    wi, wj = trace.words[i], trace.words[j]
    for ell in range(len(wi) + 1):
        theta = [u for _, u in wi[len(wi) - ell:]]
        # clause: every word of the segment ends with exactly these occurrences
        if any([u for _, u in trace.words[k][len(trace.words[k]) - ell:]] != theta or len(trace.words[k]) < ell
               for k in range(i, j + 1)):
            continue
        # clause: no step of the segment rewrites them
        if any(set(theta) & trace.steps[k].consumed for k in range(i, j)):
            continue
        phi = [a for a, _ in wi[:len(wi) - ell]]
        for psi in range(len(wj) - ell - len(phi) + 1):
            if len(phi) + psi + ell == len(wj) and [a for a, _ in wj[:len(phi)]] == phi:
                return True
    return False


# Turchin relation on multi-layer traces -------------------------------------------------


def mlpg_turchin_oracle(words, consumed, guard: int, i: int, j: int) -> bool:
    """Replays the words of ``[i, j]`` and tests each clause for every ``ell``."""
    vi, vj = words[i].visible.letters, words[j].visible.letters
    for ell in range(len(vi) + 1):
        theta = [x.uid for x in vi[len(vi) - ell:]]
        ok = True
        for k in range(i, j + 1):
            vk = words[k].visible.letters
            if len(vk) < ell or [x.uid for x in vk[len(vk) - ell:]] != theta:
                ok = False
                break
            # the suffix never sits in an invisible layer
            if set(theta) & {x.uid for x in words[k].invisible.letters}:
                ok = False
                break
            if k < j:
                if len(vk) - ell < guard:
                    ok = False
                    break
                if set(theta) & consumed[k]:
                    ok = False
                    break
        if not ok:
            continue
        n = len(vi) - ell
        if len(vj) >= len(vi) and [x.letter for x in vi[:n]] == [x.letter for x in vj[:n]]:
            return True
    return False


# homeomorphic embedding -------------------------------------------------------------------


def _subterms(t: Term) -> list[Term]:
    out = [t]
    if not isinstance(t, Var):
        for a in t.args:
            out.extend(_subterms(a))
    return out


def _key(t: Term):
    if isinstance(t, Var):
        return ("v",)
    return ("c" if isinstance(t, Call) else "k", t.name, len(t.args))


def hve_table(a: Term, b: Term) -> bool:
    """Bottom-up table over all subterm pairs: variable, diving and coupling rules."""
    sa = sorted(set(_subterms(a)), key=_size)
    sb = sorted(set(_subterms(b)), key=_size)
    emb: dict[tuple[Term, Term], bool] = {}
    for y in sb:
        for x in sa:
            val = False
            if isinstance(x, Var) and isinstance(y, Var):
                val = True
            elif not isinstance(y, Var):
                if any(emb[(x, c)] for c in y.args):
                    val = True
                elif not isinstance(x, Var) and _key(x) == _key(y):
                    val = all(emb[(p, q)] for p, q in zip(x.args, y.args))
            emb[(x, y)] = val
    return emb[(a, b)]


def _size(t: Term) -> int:
    return 1 if isinstance(t, Var) else 1 + sum(_size(a) for a in t.args)


# the log2 program, evaluated directly -------------------------------------------------------


def log2_f(n: int) -> int:
    return 0 if n == 0 else log2_f(log2_g(n)) + 1


def log2_g(n: int) -> int:
    return 0 if n == 0 else log2_h(n - 1)


def log2_h(n: int) -> int:
    return 0 if n == 0 else log2_g(n - 1) + 1


# structural isomorphism of programs ----------------------------------------------------------


def programs_isomorphic(p, q) -> bool:
    """Equal up to a bijective renaming of functions and, per rule, of variables."""
    from itertools import permutations

    fp, fq = sorted(p.functions), sorted(q.functions)
    if len(fp) != len(fq) or len(p.rules) != len(q.rules):
        return False
    for perm in permutations(fq):
        ren = dict(zip(fp, perm))
        if all(p.arity(f) == q.arity(ren[f]) for f in fp) and _rules_match(p, q, ren):
            return True
    return False


def _rules_match(p, q, ren) -> bool:
    left = sorted(_canon_rule(r, ren) for r in p.rules)
    right = sorted(_canon_rule(r, None) for r in q.rules)
    return left == right


def _canon_rule(rule, ren) -> str:
    names: dict[str, str] = {}

    def go(t: Term) -> str:
        if isinstance(t, Var):
            names.setdefault(t.name, f"v{len(names)}")
            return names[t.name]
        head = t.name
        if isinstance(t, Call) and ren is not None:
            head = ren[head]
        kind = "C" if isinstance(t, Call) else "K"
        return f"{kind}:{head}(" + ",".join(go(a) for a in t.args) + ")"

    name = ren[rule.name] if ren is not None else rule.name
    pats = ",".join(go(x) for x in rule.patterns)
    return f"{name}[{pats}]={go(rule.body)}"
