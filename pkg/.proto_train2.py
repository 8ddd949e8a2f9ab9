"""Check that input standardization unblocks learning."""
import numpy as np

import slsmooth as s
from slsmooth.clustering import standardize

spec = s.default_spec()
train, test = s.generate(spec, 2000, seed=20240101)
xtr, mean, scale = standardize(train.features)
xte = (test.features - mean) / scale
test_std = s.Dataset(features=xte, labels=test.labels, num_classes=2)

plan = s.none_plan(1, 2)
targets = s.soft_labels(train, None, plan)
mlp = s.init_mlp([train.num_features, 256, 2], seed=0)
cfg = s.TrainConfig(epochs=300, batch_size=128, learning_rate=0.01, seed=0)
metrics = s.train(mlp, xtr, targets, cfg, eval_dataset=test_std)
for rec in metrics[::50] + [metrics[-1]]:
    print(rec["epoch"], round(rec["train_loss"], 4), round(100 * rec["test_error"], 2))
