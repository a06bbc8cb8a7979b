"""Minimal fasta reader: (id, sequence) pairs in file order.

The id is the header up to the first whitespace; annotation fields after
a '|' are kept as part of the id so downstream files can key on the
exact header token.
"""


class FastaError(ValueError):
    pass


def parse_fasta(path):
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        rec_id = None
        parts = []
        header_line = 0

        def flush():
            if rec_id is None:
                return
            seq = "".join(parts)
            if not seq:
                raise FastaError(f"{path}:{header_line}: record {rec_id!r} "
                                 "has no sequence")
            if rec_id in seen:
                raise FastaError(f"{path}: duplicate id {rec_id!r}")
            seen.add(rec_id)
            records.append((rec_id, seq))

        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(">"):
                flush()
                rec_id = line[1:].split()[0] if line[1:].split() else ""
                if not rec_id:
                    raise FastaError(f"{path}:{lineno}: empty header")
                header_line = lineno
                parts = []
            elif rec_id is None:
                raise FastaError(f"{path}:{lineno}: sequence before any header")
            else:
                parts.append(line)
        flush()
    if not records:
        raise FastaError(f"{path}: no records found")
    return records
