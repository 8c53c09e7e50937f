# %% [markdown]
# # Generator matrices, symbolic and numeric
#
# A passive rate is an unknown `x_a` tied to its label.  Two passive branches
# on the same label share one variable, so the diagonal below is `-2x_a` and
# never `-(x + y)`.

# %%
import numpy as np

from sspa import build_generator, enumerate_states, evaluate_generator, parse_model, desugar
from sspa import Ident, apply_closure, rate_labelled, solve_invariant
from sspa.ctmc import generator_json

m = desugar(parse_model("M = (a,?).(b,1.0).M + (a,?).(c,?).M;"))
space = enumerate_states(Ident("M"), m)
g = build_generator(space)
for name, row in zip(space.names(), g.to_strings()):
    print(f"{name:>4}: {row}")
print(generator_json(g))

# %% [markdown]
# Instantiating the variables gives an ordinary generator whose rows sum to zero.

# %%
Q = evaluate_generator(g, {"a": 2.0, "c": 1.0})
print(Q)
print("row sums:", Q.sum(axis=1))

# %% [markdown]
# Closing the passive `b` of the four-state cycle with rate 3 yields a closed
# chain.  Its generator is read straight off the diagram.

# %%
fig = desugar(parse_model("A0 = (a,1.0).(b,?).(a,2.0).(b,?).A0;"))
closed = apply_closure(Ident("A0"), "b", 3.0)
cyc = enumerate_states(closed, fig)
Qc = evaluate_generator(build_generator(cyc))
print(Qc)
print("stationary:", solve_invariant(Qc).values)

# %% [markdown]
# Self-loops never reach the generator, but they do count in the per-label
# rate from a state to itself, which is what the reversed rates use.

# %%
looped = desugar(parse_model("E0 = (a,1.0).E1 + (a,2.0).E0; E1 = (d,2.0).E0;"))
plain = desugar(parse_model("E0 = (a,1.0).E1; E1 = (d,2.0).E0;"))
for label, env in (("with loop", looped), ("without", plain)):
    sp = enumerate_states(Ident("E0"), env)
    q = evaluate_generator(build_generator(sp))
    qa = rate_labelled(sp.transitions[0], Ident("E0"), Ident("E0"), "a")
    print(f"{label:>9}: Q = {q.tolist()}, q_a(E0->E0) = {qa}")
print("identical generators:", np.array_equal(
    evaluate_generator(build_generator(enumerate_states(Ident("E0"), looped))),
    evaluate_generator(build_generator(enumerate_states(Ident("E0"), plain)))))
