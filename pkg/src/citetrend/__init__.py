"""Citation-trend analytics for arXiv corpora.

Ingests arXiv metadata, snapshots citation counts, ranks papers by a
week-normalized stable z-score and derives keyword-trend and institutional
contribution reports.
"""

__version__ = "0.1.0"

CORPUS_SCHEMA = "citetrend.corpus/1"
SNAPSHOT_SCHEMA = "citetrend.snapshot/1"
AFFILIATION_SCHEMA = "citetrend.affiliations/1"
REPORT_SCHEMA = "citetrend.report/1"
