"""Independent reference implementations used to cross-check the library."""

from itertools import combinations, product

from spcomp.terms import Enc, Func, Pair


def tree_positions(t):
    """Every subtree of ``t`` keyed by its position path."""
    out = {(): t}
    frontier = [()]
    while frontier:
        pos = frontier.pop()
        node = out[pos]
        kids = []
        if isinstance(node, Pair):
            kids = [node.left, node.right]
        elif isinstance(node, Enc):
            kids = [node.body, node.key]
        for i, k in enumerate(kids):
            out[pos + (i,)] = k
            frontier.append(pos + (i,))
    return out


def brute_paths(m, n):
    """Every word over the three step kinds that lands exactly on (m, n)."""
    moves = {0: (1, 0), 1: (0, 1), 2: (1, 1)}
    found = set()
    for length in range(max(m, n), m + n + 1):
        for word in product(range(3), repeat=length):
            di = sum(moves[w][0] for w in word)
            dj = sum(moves[w][1] for w in word)
            if (di, dj) == (m, n):
                found.add(word)
    return found


def _decrypt_key(e, inverses):
    if e.func in (Func.SK, Func.MK):
        return e.key
    if e.func in (Func.PK, Func.PVK):
        return inverses.get(e.key)
    return None


def bfs_derivable(target, knowledge, inverses, rounds=12):
    """Breadth-first Dolev-Yao closure restricted to the subterm universe."""
    universe = set()
    for t in list(knowledge) + [target]:
        universe |= set(tree_positions(t).values())
    known = set(knowledge)
    for _ in range(rounds):
        if target in known:
            return True
        new = set()
        for t in known:
            if isinstance(t, Pair):
                new |= {t.left, t.right}
            if isinstance(t, Enc):
                k = _decrypt_key(t, inverses)
                if k is not None and k in known:
                    new.add(t.body)
        for u in universe:
            if isinstance(u, Pair) and u.left in known and u.right in known:
                new.add(u)
            if isinstance(u, Enc) and u.body in known and u.key in known:
                new.add(u)
        if new <= known:
            break
        known |= new
    return target in known


def max_concat_matching(p1, p2):
    """Largest set of order-respecting, endpoint-compatible message pairs."""
    pairs = [(i, j) for i in range(len(p1.messages)) for j in range(len(p2.messages))
             if p1.messages[i].endpoints() == p2.messages[j].endpoints()]
    for size in range(min(len(p1.messages), len(p2.messages)), 0, -1):
        for chosen in combinations(pairs, size):
            if all(a[0] < b[0] and a[1] < b[1] for a, b in zip(chosen, chosen[1:])):
                return size
    return 0
