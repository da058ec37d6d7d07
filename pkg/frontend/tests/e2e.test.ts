/** End-to-end: the real DOM UI against a live survey backend.
 *
 * Spawns `toonlab survey serve` with a generated 20-task definition, boots
 * the app in happy-dom, clicks through all 20 tasks, and checks the log on
 * disk plus the blinding and submit-gating invariants along the way.
 */

import { spawn, type ChildProcess } from "node:child_process"
import { mkdtempSync, readFileSync, writeFileSync, mkdirSync } from "node:fs"
import { createServer } from "node:net"
import { tmpdir } from "node:os"
import { join } from "node:path"
import { afterAll, beforeAll, describe, expect, it } from "vitest"

import { boot } from "../src/main"
import type { SurveyState } from "../src/state"

const MODELS = ["cartoongan", "ganilla", "ours"]
const TINY_PNG = Buffer.from(
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQDwAEhQGAhKmMIQAAAABJRU5ErkJggg==",
  "base64",
)

let server: ChildProcess
let baseUrl: string
let logPath: string

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer()
    srv.once("error", reject)
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as { port: number }).port
      srv.close(() => resolve(port))
    })
  })
}

function writeSurveyFixture(root: string): string {
  mkdirSync(join(root, "images"), { recursive: true })
  const tasks = []
  for (let i = 0; i < 20; i++) {
    const id = String(i).padStart(2, "0")
    const images: Record<string, string> = {}
    for (const m of MODELS) {
      const rel = `images/${m}_${id}.png`
      writeFileSync(join(root, rel), TINY_PNG)
      images[m] = rel
    }
    tasks.push({
      id: `t${id}`,
      question: i < 10 ? "aesthetic" : "cartoon",
      source: `images/src${id}.png`,
      images,
    })
  }
  const def = {
    questions: [{ id: "aesthetic" }, { id: "cartoon" }],
    models: MODELS,
    tasks,
  }
  const defPath = join(root, "survey.json")
  writeFileSync(defPath, JSON.stringify(def))
  return defPath
}

async function waitForServer(url: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${url}/api/report`)
      if (res.ok) return
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150))
  }
  throw new Error("survey server did not come up")
}

async function until(cond: () => boolean, timeoutMs = 10_000): Promise<void> {
  const deadline = Date.now() + timeoutMs
  while (Date.now() < deadline) {
    if (cond()) return
    await new Promise((r) => setTimeout(r, 20))
  }
  throw new Error("condition not reached in time")
}

beforeAll(async () => {
  const root = mkdtempSync(join(tmpdir(), "survey-e2e-"))
  const defPath = writeSurveyFixture(root)
  logPath = join(root, "responses.log")
  const port = await freePort()
  baseUrl = `http://127.0.0.1:${port}`
  server = spawn("python3", [
    "-m", "toonlab.cli", "survey", "serve",
    "--def", defPath, "--store", logPath, "--bind", `127.0.0.1:${port}`,
  ], { stdio: ["ignore", "pipe", "pipe"] })
  await waitForServer(baseUrl)
})

afterAll(() => {
  server?.kill("SIGTERM")
})

function logLines(): Array<Record<string, unknown>> {
  let text = ""
  try {
    text = readFileSync(logPath, "utf-8")
  } catch {
    return []
  }
  return text.split("\n").filter(Boolean).map((l) => JSON.parse(l))
}

function clickRank(root: HTMLElement, cardIndex: number, rank: number): void {
  const buttons = root.querySelectorAll<HTMLButtonElement>(
    `.card:nth-child(${cardIndex + 1}) .rank-btn`,
  )
  const btn = Array.from(buttons).find((b) => b.dataset.rank === String(rank))
  if (!btn) throw new Error(`no rank button ${rank} on card ${cardIndex}`)
  btn.click()
}

function submitButton(root: HTMLElement): HTMLButtonElement {
  return root.querySelector("#submit-task") as HTMLButtonElement
}

describe("survey UI end to end", () => {
  it("completes 20 tasks, persisting 20 records, blind throughout", async () => {
    const root = document.createElement("main")
    document.body.append(root)
    window.localStorage.clear()

    const state: SurveyState = await boot({ base: baseUrl, root, storage: window.localStorage })
    await until(() => root.querySelectorAll(".card").length === 3)

    for (let task = 0; task < 20; task++) {
      expect(root.querySelector(".progress")?.textContent).toBe(`${task + 1}/20`)
      // blinding: no model identifiers anywhere in the rendered document
      const html = root.innerHTML.toLowerCase()
      for (const m of MODELS) expect(html).not.toContain(m)

      // prompt switches question parts at task 11
      const prompt = root.querySelector(".prompt")?.textContent ?? ""
      if (task < 10) expect(prompt).toContain("aesthetic")
      else expect(prompt).toContain("cartoon")

      expect(submitButton(root).disabled).toBe(true)
      clickRank(root, 0, 1)
      clickRank(root, 1, 2)
      expect(submitButton(root).disabled).toBe(true) // partial ranking gated
      clickRank(root, 2, 3)
      expect(submitButton(root).disabled).toBe(false)

      submitButton(root).click()
      await until(() =>
        state.isComplete() || root.querySelector(".progress")?.textContent === `${task + 2}/20`)
    }

    expect(state.isComplete()).toBe(true)
    await until(() => root.querySelector(".completion") !== null)
    const rankings = logLines().filter((l) => l.kind === "ranking")
    expect(rankings.length).toBe(20)
    const pids = new Set(rankings.map((r) => r.participant_id))
    expect(pids.size).toBe(1)
  })

  it("rank buttons keep a bijection via the swap rule in the DOM", async () => {
    const root = document.createElement("main")
    document.body.append(root)
    window.localStorage.clear()
    await boot({ base: baseUrl, root, storage: window.localStorage })
    await until(() => root.querySelectorAll(".card").length === 3)

    clickRank(root, 0, 1)
    clickRank(root, 1, 1) // steals rank 1 from card 0
    const selected = root.querySelectorAll(".rank-btn.selected")
    expect(selected.length).toBe(1)
    expect((selected[0] as HTMLButtonElement).dataset.rank).toBe("1")
    expect(submitButton(root).disabled).toBe(true)
  })

  it("resumes from the persisted participant token on reload", async () => {
    const storage = window.localStorage
    storage.clear()
    const rootA = document.createElement("main")
    document.body.append(rootA)
    const sessionsBefore = logLines().filter((l) => l.kind === "session").length

    const stateA = await boot({ base: baseUrl, root: rootA, storage })
    await until(() => rootA.querySelectorAll(".card").length === 3)
    clickRank(rootA, 0, 1)
    clickRank(rootA, 1, 2)
    clickRank(rootA, 2, 3)
    submitButton(rootA).click()
    await until(() => rootA.querySelector(".progress")?.textContent === "2/20")

    // simulated reload: fresh DOM, same storage
    const rootB = document.createElement("main")
    document.body.append(rootB)
    const stateB = await boot({ base: baseUrl, root: rootB, storage })
    await until(() => rootB.querySelectorAll(".card").length === 3)
    expect(stateB.session.participant_id).toBe(stateA.session.participant_id)
    expect(rootB.querySelector(".progress")?.textContent).toBe("2/20")

    const sessionsAfter = logLines().filter((l) => l.kind === "session").length
    expect(sessionsAfter).toBe(sessionsBefore + 1) // reload did not open a session
  })

  it("shows an error and keeps ranks when the server rejects", async () => {
    const root = document.createElement("main")
    document.body.append(root)
    window.localStorage.clear()
    const state = await boot({ base: baseUrl, root, storage: window.localStorage })
    await until(() => root.querySelectorAll(".card").length === 3)

    clickRank(root, 0, 1)
    clickRank(root, 1, 2)
    clickRank(root, 2, 3)
    // sabotage the payload: point the task at a different task's id
    const task = state.currentTask()!
    const original = task.task_id
    task.task_id = "t19" // foreign task for this ranking's image ids -> 409
    submitButton(root).click()
    await until(() => root.querySelector(".error") !== null)
    expect(root.querySelector(".progress")?.textContent).toBe("1/20")
    expect(root.querySelectorAll(".rank-btn.selected").length).toBe(3)
    task.task_id = original
  })
})
