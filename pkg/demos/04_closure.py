# %% [markdown]
# # Closing passive labels
#
# `X[a <- r]` turns every passive `a` rate of `X` into the number `r` and
# leaves active rates alone.  Three facts about it are checked here on a
# process with two passive labels.

# %%
from sspa import (
    Ident, apply_closure, apply_closure_set, is_closed, passive_labels, strong_bisimilar,
)
from sspa import library
from sspa.semantics import lts_text

m = library.load("alternating")
b0 = Ident("B0")
print(lts_text(b0, m))
print("passive labels:", sorted(passive_labels(b0, m)))

# %% [markdown]
# The order of closures does not matter.

# %%
ab = apply_closure(apply_closure(b0, "a", 1.0), "b", 2.0)
ba = apply_closure(apply_closure(b0, "b", 2.0), "a", 1.0)
print(lts_text(ab, m))
print("a then b ~ b then a:", strong_bisimilar(ab, ba, m))

# %% [markdown]
# Closing every passive label leaves a closed process, and closing it again
# changes nothing observable.

# %%
full = apply_closure_set(b0, {"a": 1.0, "b": 2.0})
print("closed:", is_closed(full, m))
print("re-closing is neutral:", strong_bisimilar(apply_closure(full, "a", 9.0), full, m))
