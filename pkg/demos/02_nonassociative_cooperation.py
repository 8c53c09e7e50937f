# %% [markdown]
# # Cooperation is commutative but not associative
#
# `A1 = (a,1).0` is active on `a`; `A2` and `A3` are both passive on `a`.
# A synchronisation needs exactly one active and one passive partner, so how
# the three are grouped matters.

# %%
from sspa import Coop, library, resolve, strong_bisimilar
from sspa.semantics import lts_text

m = library.load("nonassoc")
for name in ("Inner", "Left", "Pair", "Right"):
    print(f"{name:>5} = {resolve(m, name)}")

# %% [markdown]
# Grouping the two passive processes first leaves them stuck: neither can
# supply a rate.  The outer cooperation then has nobody passive to pair `A1`
# with, so the whole system is inert.

# %%
print("Inner moves:", repr(lts_text(resolve(m, "Inner"), m)))
print("Left moves: ", repr(lts_text(resolve(m, "Left"), m)))
print("Left  ~ 0:", strong_bisimilar(resolve(m, "Left"), resolve(m, "Zero"), m))

# %% [markdown]
# Pairing `A1` with `A2` first lets them fire together, so the other grouping
# is not equivalent to the inert process.

# %%
print(lts_text(resolve(m, "Right"), m))
print("Right ~ 0:", strong_bisimilar(resolve(m, "Right"), resolve(m, "Zero"), m))

# %% [markdown]
# Swapping the components of a single cooperation never changes behaviour.

# %%
pair = resolve(m, "Pair")
swapped = Coop(pair.coop_set, pair.components[::-1])
print(pair, "~", swapped, ":", strong_bisimilar(pair, swapped, m))
