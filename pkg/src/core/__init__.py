# Joint extractor: encoders, span sampling, model heads, losses and training
