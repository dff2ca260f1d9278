"""Text cleaning and the word-level vocabulary, step by step.

Run: python demos/01_cleaning_and_vocab.py
"""

from weakpairs import build_vocab, clean, encode_ids, tokenize

raw = "Check THIS out https://t.co/Ab3dE @friend_99  SO   cool!!"
print("raw:      ", repr(raw))
print("cleaned:  ", repr(clean(raw)))
print("tokens:   ", tokenize(clean(raw)))
print()

# cleaning is idempotent: applying it twice changes nothing
once = clean(raw)
assert clean(once) == once
print("clean(clean(x)) == clean(x) holds")
print()

# vocabulary: most frequent tokens first, ties broken alphabetically,
# ids 0 and 1 reserved for padding and unknown tokens
corpus = [
    clean("the match tonight was incredible"),
    clean("the referee missed THE obvious call"),
    clean("incredible goal in the last minute"),
]
vocab = build_vocab(corpus, max_size=12)
print(f"vocabulary ({len(vocab)} entries):")
for token, idx in sorted(vocab.token_to_id.items(), key=lambda kv: kv[1]):
    print(f"  {idx:2d}  {token}")
print()

text = clean("The INCREDIBLE final whistle")
print("encode:", text, "->", encode_ids(vocab, text, max_len=8))
print("('final' and 'whistle' are out of vocabulary, so both map to id 1)")
