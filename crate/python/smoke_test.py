"""Build the extension (maturin build -m crates/python/Cargo.toml), install the
wheel, then run this file."""

import json
import random

import pyhlta


def planted_rows(docs, groups=3, per_group=4, seed=7):
    rng = random.Random(seed)
    words = [f"g{g}w{i}" for g in range(groups) for i in range(per_group)]
    rows = []
    for _ in range(docs):
        on = [rng.random() < 0.5 for _ in range(groups)]
        rows.append([int(rng.random() < (0.85 if on[g] else 0.05)) for g in range(groups) for _ in range(per_group)])
    return words, rows


def main():
    words, rows = planted_rows(1500)
    model = pyhlta.learn(words, rows, tau=30, kappa=20, seed=1)
    assert model.validate() == [], model.validate()
    assert sorted(model.words) == sorted(words)
    assert model.levels >= 1

    again = pyhlta.Model.from_text(model.to_text())
    assert again.to_text() == model.to_text()
    assert pyhlta.learn(words, rows, tau=30, kappa=20, seed=1).to_text() == model.to_text()

    doc = json.loads(model.topics(words, rows, words_per_topic=4))
    assert doc["format"] == "hlta-topics"
    stack = list(doc["topics"])
    level_one = 0
    while stack:
        topic = stack.pop()
        stack.extend(topic["children"])
        if topic["level"] == 1:
            level_one += 1
            group = topic["words"][0]["word"][:2]
            assert all(w["word"].startswith(group) for w in topic["words"]), topic
    assert level_one == 3, level_one

    ll = model.loglik(words, rows)
    assert ll > len(words) * -0.6931471805599453, ll
    score = pyhlta.topic_coherence(json.dumps(doc), words, rows, m=4)
    assert score <= 6 * 0.6931471805599453, score

    try:
        model.loglik(words, [[2] * len(words)])
    except pyhlta.HltaError:
        pass
    else:
        raise AssertionError("bad rows accepted")

    print(f"ok: {model!r}, loglik per doc {ll:.4f}, coherence {score:.4f}")


if __name__ == "__main__":
    main()
