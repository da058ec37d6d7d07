/** DOM rendering: one task at a time, three images, per-image rank buttons. */

import { RANKS, SurveyState } from "./state"

export type ViewHandlers = {
  onAssign: (image: string, rank: number) => void
  onSubmit: () => void
  onRetry?: () => void
}

export function render(
  root: HTMLElement,
  state: SurveyState,
  handlers: ViewHandlers,
  options: { busy?: boolean; error?: string } = {},
): void {
  root.textContent = ""

  if (state.isComplete()) {
    const done = document.createElement("section")
    done.className = "completion"
    const h = document.createElement("h1")
    h.textContent = "All done!"
    const p = document.createElement("p")
    p.textContent = `Thank you for ranking all ${state.taskCount} image sets.`
    done.append(h, p)
    root.append(done)
    return
  }

  const task = state.currentTask()!
  const header = document.createElement("header")
  const progress = document.createElement("span")
  progress.className = "progress"
  progress.textContent = state.progressLabel()
  const prompt = document.createElement("h2")
  prompt.className = "prompt"
  prompt.textContent = task.prompt
  header.append(progress, prompt)
  root.append(header)

  const row = document.createElement("div")
  row.className = "images"
  for (const image of task.images) {
    const card = document.createElement("figure")
    card.className = "card"
    const img = document.createElement("img")
    img.src = image
    img.alt = "stylized image"
    card.append(img)

    const buttons = document.createElement("div")
    buttons.className = "ranks"
    for (const rank of RANKS) {
      const btn = document.createElement("button")
      btn.type = "button"
      btn.className = "rank-btn"
      btn.dataset.image = image
      btn.dataset.rank = String(rank)
      btn.textContent = String(rank)
      if (state.rankOf(image) === rank) btn.classList.add("selected")
      btn.disabled = Boolean(options.busy)
      btn.addEventListener("click", () => handlers.onAssign(image, rank))
      buttons.append(btn)
    }
    card.append(buttons)
    row.append(card)
  }
  root.append(row)

  const footer = document.createElement("footer")
  if (options.error) {
    const err = document.createElement("p")
    err.className = "error"
    err.textContent = options.error
    footer.append(err)
  }
  const submit = document.createElement("button")
  submit.type = "button"
  submit.id = "submit-task"
  submit.textContent = "Submit ranking"
  submit.disabled = !state.canSubmit() || Boolean(options.busy)
  submit.addEventListener("click", () => handlers.onSubmit())
  footer.append(submit)
  root.append(footer)
}

export function renderFatal(root: HTMLElement, message: string, onRetry: () => void): void {
  root.textContent = ""
  const box = document.createElement("section")
  box.className = "fatal"
  const p = document.createElement("p")
  p.className = "error"
  p.textContent = message
  const retry = document.createElement("button")
  retry.type = "button"
  retry.id = "retry"
  retry.textContent = "Retry"
  retry.addEventListener("click", onRetry)
  box.append(p, retry)
  root.append(box)
}
