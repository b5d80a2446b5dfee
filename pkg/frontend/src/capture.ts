// Webcam still capture. The service consumes single frames, not streams:
// we grab one video frame onto a canvas and encode it as PNG.

export interface CameraHandle {
  captureStill(): Promise<Blob>;
  close(): void;
}

export async function openCamera(
  video: HTMLVideoElement,
  mediaDevices: MediaDevices = navigator.mediaDevices,
): Promise<CameraHandle> {
  const stream = await mediaDevices.getUserMedia({ video: true, audio: false });
  video.srcObject = stream;
  await video.play();

  return {
    async captureStill(): Promise<Blob> {
      const canvas = document.createElement('canvas');
      canvas.width = video.videoWidth || 640;
      canvas.height = video.videoHeight || 480;
      const ctx = canvas.getContext('2d');
      if (!ctx) throw new Error('canvas 2d context unavailable');
      ctx.drawImage(video, 0, 0, canvas.width, canvas.height);
      return new Promise<Blob>((resolve, reject) => {
        canvas.toBlob(
          (blob) => (blob ? resolve(blob) : reject(new Error('canvas encoding failed'))),
          'image/png',
        );
      });
    },
    close(): void {
      for (const track of stream.getTracks()) track.stop();
      video.srcObject = null;
    },
  };
}

export async function blobToBase64(blob: Blob): Promise<string> {
  const buffer = await blob.arrayBuffer();
  let binary = '';
  const bytes = new Uint8Array(buffer);
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}
