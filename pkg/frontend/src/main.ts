/** Bootstrap: session creation/resume, submission flow, persistence.
 *
 * The participant token and task list persist in localStorage, so a mid-survey
 * refresh resumes at the same task instead of opening a second session.  At
 * most one submission is in flight; controls disable while it runs.
 */

import { createSession, SessionPayload, submitRanking } from "./api"
import { SurveyState } from "./state"
import { render, renderFatal } from "./view"

const SESSION_KEY = "toonlab-survey-session"
const PROGRESS_KEY = "toonlab-survey-progress"

export type BootOptions = {
  base?: string
  root?: HTMLElement
  storage?: Storage
}

export async function boot(options: BootOptions = {}): Promise<SurveyState> {
  const base = options.base ?? ""
  const root = options.root ?? (document.getElementById("app") as HTMLElement)
  const storage = options.storage ?? window.localStorage

  let session: SessionPayload | null = null
  let startIndex = 0
  const saved = storage.getItem(SESSION_KEY)
  if (saved) {
    try {
      session = JSON.parse(saved) as SessionPayload
      startIndex = Number(storage.getItem(PROGRESS_KEY) ?? "0") || 0
    } catch {
      session = null
    }
  }
  if (!session) {
    try {
      session = await createSession(base)
    } catch (e) {
      renderFatal(root, "Could not reach the survey server.", () => {
        void boot(options)
      })
      throw e
    }
    storage.setItem(SESSION_KEY, JSON.stringify(session))
    storage.setItem(PROGRESS_KEY, "0")
  }

  const state = new SurveyState(session, startIndex)
  let busy = false
  let error: string | undefined

  const redraw = () =>
    render(root, state, { onAssign: assign, onSubmit: submit }, { busy, error })

  function assign(image: string, rank: number): void {
    if (busy) return
    state.assignRank(image, rank)
    error = undefined
    redraw()
  }

  async function submit(): Promise<void> {
    if (busy || !state.canSubmit()) return
    const task = state.currentTask()!
    busy = true
    redraw()
    const result = await submitRanking(
      base, state.session.participant_id, task.task_id, state.rankingsPayload())
    busy = false
    if (result.ok) {
      error = undefined
      state.advance()
      storage.setItem(PROGRESS_KEY, String(state.index))
      if (state.isComplete()) {
        storage.removeItem(SESSION_KEY)
        storage.removeItem(PROGRESS_KEY)
      }
    } else {
      error = result.detail // task re-shown with ranks preserved
    }
    redraw()
  }

  redraw()
  return state
}

declare global {
  interface Window {
    toonlabSurveyBoot?: typeof boot
  }
}

if (typeof window !== "undefined") {
  window.toonlabSurveyBoot = boot
  if (document.getElementById("app")) {
    void boot()
  }
}
