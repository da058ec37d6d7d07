/** Typed client for the survey service endpoints. */

export type TaskPayload = {
  task_id: string
  question_id: string
  prompt: string
  images: string[]
}

export type SessionPayload = {
  participant_id: string
  tasks: TaskPayload[]
}

export type SubmitResult =
  | { ok: true }
  | { ok: false; status: number; detail: string }

export async function createSession(base: string): Promise<SessionPayload> {
  const res = await fetch(`${base}/api/session`, { method: "POST" })
  if (!res.ok) throw new Error(`session request failed (${res.status})`)
  return (await res.json()) as SessionPayload
}

export async function submitRanking(
  base: string,
  participantId: string,
  taskId: string,
  rankings: Record<string, number>,
): Promise<SubmitResult> {
  const res = await fetch(`${base}/api/session/${participantId}/response`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ task_id: taskId, rankings }),
  })
  if (res.ok) return { ok: true }
  let detail = `request failed (${res.status})`
  try {
    const body = await res.json()
    if (body && typeof body.detail === "string") detail = body.detail
  } catch {
    // keep the generic detail
  }
  return { ok: false, status: res.status, detail }
}
