#!/usr/bin/env python
import sys

import pandas as pd

filename = sys.argv[1]
dataset = sys.argv[2] if len(sys.argv) > 2 else None

df = pd.read_csv(sys.stdin if filename == '-' else filename)
if dataset is not None:
    df = df[df['dataset'] == dataset]

print('Test accuracy by budget (mean, std, seeds):')
print(df.groupby(['dataset', 'strategy', 'budget'])['test_accuracy'].agg(
    ['mean', 'std', 'count']).unstack('strategy').round(4))
