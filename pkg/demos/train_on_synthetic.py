"""
Training on a synthetic click log
=================================

Real news logs are large, so this walk-through uses a generated corpus with
known structure: every article belongs to one of eight topics, every user
reads one topic, and a click means "same topic" apart from 10% label noise.
A perfect topic detector therefore scores well but not perfectly.
"""

from fum import DESK_CONFIG
from fum.metrics import ablation_run, ablation_tsv, report_from_scores
from fum.synthetic import SyntheticSpec, generate_synthetic
from fum.training import run_training

# A smaller corpus than the acceptance run keeps this under a minute.
spec = SyntheticSpec(n_users=400, n_news=800, n_train=1500, n_valid=400)
corpus = generate_synthetic(spec)
bundle = corpus.bundle(k=DESK_CONFIG.k, l=DESK_CONFIG.l)
print(len(bundle.news), "articles,", len(bundle.vocab), "vocabulary entries")

# %%
# The ceiling set by the noise: score candidates by the hidden topics.
oracle = [
    [float(corpus.news_topic[n] == corpus.user_topic[imp.user_id]) for n in imp.candidate_ids]
    for imp in corpus.valid
]
print("topic oracle AUC %.3f" % report_from_scores(oracle, [imp.labels for imp in corpus.valid]).auc)

# %%
# Two epochs of Adam at learning rate 1e-4 with one sampled negative per click.
result = run_training(bundle, DESK_CONFIG)
print(result.log_tsv())

# %%
# The same data with one user branch switched off at a time.
print(ablation_tsv(ablation_run(bundle, DESK_CONFIG)))
