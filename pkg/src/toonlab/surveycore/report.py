"""Mean-rank aggregation over ranking records.

Means are exact arithmetic over the submitted ranks; rounding happens only
when a report is rendered for display (2 decimals).  For any complete record
set the three per-question means sum to exactly 6, because every record
spends ranks {1, 2, 3} once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .store import RankingRecord


@dataclass
class MeanRankReport:
    # question id -> model id -> {"mean_rank": float, "count": int}
    questions: dict = field(default_factory=dict)
    total_records: int = 0

    def mean(self, question_id: str, model: str) -> float:
        return self.questions[question_id][model]["mean_rank"]

    def count(self, question_id: str, model: str) -> int:
        return self.questions[question_id][model]["count"]

    def to_dict(self) -> dict:
        return {"questions": self.questions, "total_records": self.total_records}

    def render_text(self) -> str:
        lines = []
        for qid in sorted(self.questions):
            lines.append(f"question: {qid}")
            for model in sorted(self.questions[qid]):
                cell = self.questions[qid][model]
                lines.append(
                    f"  {model:<12} mean rank {cell['mean_rank']:.2f}"
                    f"  (n={cell['count']})")
        lines.append(f"records: {self.total_records}")
        return "\n".join(lines)


def mean_rank_report(records: list[RankingRecord]) -> MeanRankReport:
    """Arithmetic mean of each model's ranks per question, with counts."""
    sums: dict = {}
    counts: dict = {}
    for rec in records:
        q = sums.setdefault(rec.question_id, {})
        c = counts.setdefault(rec.question_id, {})
        for model, rank in rec.rankings.items():
            q[model] = q.get(model, 0) + rank
            c[model] = c.get(model, 0) + 1
    questions = {
        qid: {
            model: {"mean_rank": sums[qid][model] / counts[qid][model],
                    "count": counts[qid][model]}
            for model in sums[qid]
        }
        for qid in sums
    }
    return MeanRankReport(questions=questions, total_records=len(records))
