/** Survey session state machine, independent of the DOM.
 *
 * Rank entry keeps a bijection reachable at all times: assigning a rank that
 * another image already holds swaps the two assignments (the other image
 * inherits this image's previous rank, or becomes unranked if it had none).
 * Submission is allowed only when all three images hold distinct ranks.
 */

import type { SessionPayload, TaskPayload } from "./api"

export const RANKS = [1, 2, 3] as const

export class SurveyState {
  readonly session: SessionPayload
  index: number
  assignments: Record<string, number>

  constructor(session: SessionPayload, index = 0) {
    this.session = session
    this.index = Math.max(0, Math.min(index, session.tasks.length))
    this.assignments = {}
  }

  get taskCount(): number {
    return this.session.tasks.length
  }

  isComplete(): boolean {
    return this.index >= this.taskCount
  }

  currentTask(): TaskPayload | null {
    return this.isComplete() ? null : this.session.tasks[this.index]
  }

  progressLabel(): string {
    const shown = Math.min(this.index + 1, this.taskCount)
    return `${shown}/${this.taskCount}`
  }

  rankOf(image: string): number | undefined {
    return this.assignments[image]
  }

  assignRank(image: string, rank: number): void {
    const task = this.currentTask()
    if (!task || !task.images.includes(image)) return
    if (!RANKS.includes(rank as 1 | 2 | 3)) return
    const previous = this.assignments[image]
    const holder = Object.keys(this.assignments).find(
      (img) => img !== image && this.assignments[img] === rank,
    )
    this.assignments[image] = rank
    if (holder !== undefined) {
      if (previous !== undefined) this.assignments[holder] = previous
      else delete this.assignments[holder]
    }
  }

  canSubmit(): boolean {
    const task = this.currentTask()
    if (!task) return false
    const ranks = task.images
      .map((img) => this.assignments[img])
      .filter((r): r is number => r !== undefined)
    return ranks.length === 3 && new Set(ranks).size === 3
  }

  /** Rankings payload for the current task, keyed by opaque image id. */
  rankingsPayload(): Record<string, number> {
    const task = this.currentTask()
    if (!task || !this.canSubmit()) throw new Error("ranking incomplete")
    const out: Record<string, number> = {}
    for (const img of task.images) {
      out[imageIdFromUrl(img)] = this.assignments[img]
    }
    return out
  }

  advance(): void {
    if (!this.isComplete()) {
      this.index += 1
      this.assignments = {}
    }
  }
}

export function imageIdFromUrl(url: string): string {
  const parts = url.split("/")
  return parts[parts.length - 1]
}
