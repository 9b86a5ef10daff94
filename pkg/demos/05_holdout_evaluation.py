#!/usr/bin/env python3
# Holdout evaluation: split observed entries 80/20, fit on the train part,
# score both parts by summed log-density.  Works the same on MovieLens data
# via mixedmc.evaluate.ingest_movielens (see the README for the download).

import numpy as np

from mixedmc import seeds
from mixedmc.evaluate import holdout_split, test_loglik
from mixedmc.initial import NbeConfig, nbe_fit
from mixedmc.refine import RefineConfig, refine_no_split
from mixedmc.simbench import (ALL_ORDINAL, SimSetting, generate_observation,
                              generate_truth)

s = SimSetting(setting_id=0, n=150, p=60, r=2, obs_prob=0.8, layout=ALL_ORDINAL)
_, m_star = generate_truth(s, seeds.stream(12, 0, 0, seeds.ROLE_TRUTH))
data = generate_observation(m_star, s, seeds.stream(12, 0, 0, seeds.ROLE_OBSERVATION))

split = holdout_split(data, 0.2, seeds.stream(12, 0, 0, seeds.ROLE_HOLDOUT))
print(f"train {split.train.nnz} / test {split.test.nnz} entries "
      f"(target fraction 0.20, got {split.fraction:.3f})")

m_hat = nbe_fit(split.train, NbeConfig(rho=float(s.r), r=s.r))
refined = refine_no_split(split.train, m_hat, RefineConfig(r=s.r))

for tag, m in [("NBE", m_hat), ("NBE + refinement", refined),
               ("truth", m_star), ("zeros", np.zeros_like(m_star))]:
    print(f"{tag:18s} train ll {test_loglik(m, split.train):12.1f}   "
          f"test ll {test_loglik(m, split.test):10.1f}")
